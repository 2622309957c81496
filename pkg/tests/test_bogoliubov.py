import math

import numpy as np
import pytest
from scipy.constants import hbar

from photonbec import (KernelSpec, UniformCondensate, critical_momentum,
                       critical_velocity, dispersion_delayed, dispersion_static,
                       dispersion_sweep, peak_density, scan)
from photonbec.bogoliubov import _interaction_static
from photonbec.errors import (ConfigError, DegenerateInteractionError,
                              FitQualityError, GeometryError,
                              ImaginaryBranchError, ScanPointError)
from photonbec.greens import kernel_delayed_and_derivative


@pytest.fixture(scope="module")
def cond(table1):
    return UniformCondensate.from_photon_number(6e4, table1)


@pytest.fixture(scope="module")
def kc_static(cond, spec):
    return critical_momentum(cond, spec, "static")


# ---------------------------------------------------------------------------
# condensate backdrop
# ---------------------------------------------------------------------------

def test_peak_density_oracle(table1):
    # direct arithmetic: 6e4 / (pi * (6 um)^2 * 2 um)
    assert peak_density(6e4, table1, r_bec=6e-6) == pytest.approx(
        2.6525823848649224e20, rel=1e-12)
    assert peak_density(0.0, table1) == 0.0
    assert peak_density(2 * 6e4, table1) == pytest.approx(
        2 * peak_density(6e4, table1), rel=1e-12)


def test_peak_density_flat_needs_radius(table1):
    flat = table1.replace(R=None)
    with pytest.raises(GeometryError):
        peak_density(1e4, flat)
    assert peak_density(1e4, flat, r_bec=6e-6) > 0


def test_condensate_validation(table1):
    with pytest.raises(ConfigError):
        UniformCondensate(-1.0, table1)


# ---------------------------------------------------------------------------
# dispersion branches
# ---------------------------------------------------------------------------

def test_free_particle_closure(table1, spec):
    empty = UniformCondensate(0.0, table1)
    for k in (0.0, 1e3, 1e5, 1e7):
        free = empty.free_omega(k)
        assert dispersion_static(k, empty, spec).omega == free + 0j
        assert dispersion_delayed(k, empty, spec).omega == free + 0j


def test_static_branch_real_nonnegative(cond, spec, kc_static):
    for k in np.linspace(0.01, 10, 12) * kc_static:
        pt = dispersion_static(k, cond, spec)
        assert pt.omega.imag == 0.0
        assert pt.omega.real > 0.0
        assert pt.residual <= 1e-10


def test_quadratic_recovery_at_high_k(cond, spec, kc_static):
    for mult in (10, 20, 50):
        pt = dispersion_static(mult * kc_static, cond, spec)
        assert pt.omega.real == pytest.approx(
            cond.free_omega(mult * kc_static), rel=0.01)


def test_sound_like_low_k(cond, spec, kc_static):
    ks = np.linspace(0.01, 0.1, 20) * kc_static
    omegas = np.array([dispersion_static(k, cond, spec).omega.real for k in ks])
    slope = np.sum(ks * omegas) / np.sum(ks * ks)
    residual = math.sqrt(np.sum((omegas - slope * ks) ** 2) / np.sum(omegas**2))
    assert slope > 0
    assert residual < 0.01


def test_attractive_sign_raises(table1, spec):
    flipped = UniformCondensate.from_photon_number(
        6e4, table1.replace(beta=+4.8e-4))
    with pytest.raises(ImaginaryBranchError):
        dispersion_static(1e3, flipped, spec)


def test_monotone_dispersion(cond, spec, kc_static):
    ks = np.linspace(1e-3, 10, 60) * kc_static
    omegas = [pt.omega.real for pt in dispersion_sweep(ks, cond, spec, "static")]
    assert all(b > a for a, b in zip(omegas, omegas[1:]))


def test_delayed_instability_signature(cond, spec, kc_static):
    low = dispersion_delayed(0.05 * kc_static, cond, spec)
    assert low.omega.imag > 0.0
    assert abs(low.omega.imag) > 1e3 * low.residual * abs(low.omega)
    high = dispersion_delayed(20 * kc_static, cond, spec)
    assert abs(high.omega.imag / high.omega.real) < 1e-3


def test_delayed_residuals_polished(cond, spec, kc_static):
    for k in np.geomspace(0.01, 20, 10) * kc_static:
        pt = dispersion_delayed(k, cond, spec)
        assert pt.residual <= 1e-10


def test_branch_pair_symmetry(cond, spec, kc_static):
    # if Omega solves the delayed equation, so does -conj(Omega)
    for frac in (0.03, 0.3, 3.0):
        k = frac * kc_static
        pt = dispersion_delayed(k, cond, spec)
        eps = hbar**2 * k**2 / (2 * cond.m_ph)
        for om in (pt.omega, -pt.omega.conjugate()):
            ev, _ = kernel_delayed_and_derivative(om, k, spec)
            f = om * om - (eps / hbar**2) * (eps + cond.coupling() * ev.value)
            assert abs(f) <= 1e-9 * abs(om) ** 2


def test_delayed_approaches_static_for_fast_diffusion(table1, cond, kc_static):
    # instantaneous heat response: the delay becomes invisible
    fast = KernelSpec(L=table1.L, q=table1.q, diffusivity=1e12,
                      rel_tol=1e-12)
    for k in np.linspace(0.02, 5, 9) * kc_static:
        st = dispersion_static(k, cond, fast).omega
        de = dispersion_delayed(k, cond, fast).omega
        assert de.real == pytest.approx(st.real, rel=1e-4)
        assert abs(de.imag) <= 1e-4 * st.real


def test_sweep_continuation_seeds(cond, spec, kc_static):
    ks = np.linspace(0.01, 2.0, 25) * kc_static
    points = dispersion_sweep(ks, cond, spec, "delayed")
    assert [p.k for p in points] == sorted(p.k for p in points)
    assert all(p.residual <= 1e-10 for p in points)


# ---------------------------------------------------------------------------
# critical momentum / velocity
# ---------------------------------------------------------------------------

def test_term_balance_identity(cond, spec, kc_static):
    eps = hbar**2 * kc_static**2 / (2 * cond.m_ph)
    x, _ = _interaction_static(kc_static, cond, spec)
    assert abs(eps - x) <= 1e-6 * eps


def test_critical_momentum_limits(table1, spec, cond, kc_static):
    assert critical_momentum(UniformCondensate(0.0, table1), spec, "static") == 0.0
    kc_delayed = critical_momentum(cond, spec, "delayed")
    assert 0.0 < kc_delayed <= kc_static
    with pytest.raises(DegenerateInteractionError):
        critical_momentum(
            UniformCondensate.from_photon_number(6e4, table1.replace(beta=0.0)),
            spec, "static")


def test_critical_momentum_sqrt_scalings(table1, spec):
    for axis, lo, hi in (("alpha_in", 0.1, 10.0), ("n_bec", 1e4, 1e5)):
        conds = []
        for value in (lo, hi):
            cfg = table1 if axis == "n_bec" else table1.replace(alpha_in=value)
            n = value if axis == "n_bec" else 6e4
            conds.append((value, UniformCondensate.from_photon_number(n, cfg),
                          KernelSpec.from_config(cfg, rel_tol=1e-10)))
        kcs = [critical_momentum(c, s, "static") for _, c, s in conds]
        slope = (math.log(kcs[1]) - math.log(kcs[0])) / (math.log(hi) - math.log(lo))
        assert slope == pytest.approx(0.5, abs=0.02)


def test_critical_velocity_static(cond, spec, kc_static):
    v, residual = critical_velocity(cond, spec, "static", k_c=kc_static,
                                    with_residual=True)
    # sound speed matches the kernel-weighted Bogoliubov value
    x0, _ = _interaction_static(0.0, cond, spec)
    predicted = math.sqrt(x0 / (2 * cond.m_ph))
    assert v == pytest.approx(predicted, rel=0.01)
    assert residual < 0.01


def test_critical_velocity_zero_density(table1, spec):
    assert critical_velocity(UniformCondensate(0.0, table1), spec, "static") == 0.0


def test_delayed_velocity_fit_rejected(cond, spec):
    # the delayed low-k window is sub-linear at these parameters
    with pytest.raises(FitQualityError) as err:
        critical_velocity(cond, spec, "delayed")
    assert err.value.residual > 0.05


def test_velocity_parameter_trends(table1, spec):
    def v_of(cfg, n):
        c = UniformCondensate.from_photon_number(n, cfg)
        s = KernelSpec.from_config(cfg, rel_tol=1e-10)
        return critical_velocity(c, s, "static")

    base = v_of(table1, 6e4)
    assert v_of(table1, 1e5) > base                       # more photons
    assert v_of(table1.replace(alpha_in=2.0), 6e4) > base  # more absorption
    assert v_of(table1.replace(L=4e-6), 6e4) < base        # longer cavity


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

def test_single_point_scan_matches_direct(table1, spec, cond, kc_static):
    table = scan("n_bec", [6e4], 0.0, table1, mode="static")
    value, k_c, v_c = table.rows[0]
    assert value == 6e4
    assert k_c == pytest.approx(kc_static, rel=1e-9)
    assert v_c == pytest.approx(critical_velocity(cond, spec, "static"), rel=1e-9)


def test_scan_ordering_and_errors(table1):
    with pytest.raises(ConfigError):
        scan("alpha_in", [1.0, 0.1], 6e4, table1)
    with pytest.raises(ConfigError):
        scan("unknown", [1.0], 6e4, table1)
    with pytest.raises(ScanPointError) as err:
        scan("n_bec", [1e4], 0.0, table1, mode="delayed", velocity_mode="delayed")
    assert err.value.value == 1e4
    assert isinstance(err.value.cause, FitQualityError)


def test_absorption_scan_increases_critical_momentum(table1):
    table = scan("alpha_in", [0.2, 0.63, 2.0, 6.3], 6e4, table1, mode="delayed",
                 velocity_mode="static")
    kcs = [row[1] for row in table.rows]
    vcs = [row[2] for row in table.rows]
    assert kcs == sorted(kcs)
    assert vcs == sorted(vcs)


def test_delayed_scan_with_static_velocity(table1):
    table = scan("L", [1e-6, 2e-6, 4e-6], 6e4, table1, mode="delayed",
                 velocity_mode="static")
    kcs = [row[1] for row in table.rows]
    vcs = [row[2] for row in table.rows]
    assert kcs == sorted(kcs, reverse=True)
    assert vcs == sorted(vcs, reverse=True)
