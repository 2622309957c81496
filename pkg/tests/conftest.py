import numpy as np
import pytest

from photonbec import KernelSpec, RadialGrid, default_config, derive


@pytest.fixture(scope="session")
def table1():
    return default_config()


@pytest.fixture(scope="session")
def derived(table1):
    return derive(table1)


@pytest.fixture(scope="session")
def spec(table1):
    return KernelSpec.from_config(table1, rel_tol=1e-10)


@pytest.fixture(scope="session")
def grid(derived):
    return RadialGrid(r_max=5.0 * derived.r_bec, n_points=384)


@pytest.fixture(scope="session")
def grid_coarse(derived):
    return RadialGrid(r_max=5.0 * derived.r_bec, n_points=128)


def composite_gauss(a, b, panels, order):
    """Composite Gauss-Legendre nodes/weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)
