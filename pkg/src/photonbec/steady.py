"""Self-consistent condensate + temperature steady states on a radial grid.

The condensate is reduced to 2D: the longitudinal profile is the fixed cavity
mode sqrt(2/L) sin(q pi (z+L/2)/L), the transverse field phi(rho) obeys a
Gross-Pitaevskii eigenproblem, and the solvent temperature responds to the
inelastic heating source through the Dirichlet heat problem between the
mirrors.  The effective potential is

    V(rho) = V_geom(rho) - m_ph (c/n0)^2 (beta/n0) <dT>(rho)

with <dT> the longitudinal-mode-weighted temperature rise.  For beta < 0 and
heating dT > 0 this is repulsive.

Two heat routes are implemented and cross-check each other:
  flat   -- convolution with the mode-averaged transverse kernel (infinite
            transverse plane; Bessel I0*K0 addition theorem per z-mode);
  curved -- finite-difference axisymmetric Poisson solve per z-mode with
            dT = 0 on the mirrors and at r_max.

Chemical potentials are reported relative to the beta = 0 reference of the
same geometry and grid, so mu = 0 exactly in the interaction-free case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c, hbar
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import (ConfigError, ConvergenceError, GeometryError,
                     InputError, InstabilityError)
from .greens import KernelSpec, overlap_coefficients
from .params import (CavityConfig, condensate_radius, cutoff_frequency,
                     photon_mass, trap_frequency)

__all__ = [
    "RadialGrid",
    "CondensateState",
    "temperature_from_density",
    "solve_flat",
    "solve_curved",
    "imaginary_time_ground_state",
    "observables",
]

# soft-wall geometry for flat-mirror runs: quartic ramp over the outer 15%
_WALL_ONSET = 0.85
_WALL_STRENGTH = 100.0


@dataclass(frozen=True)
class RadialGrid:
    """Uniform cell-centered radial grid: nodes r_i = (i + 1/2) h."""

    r_max: float
    n_points: int

    def __post_init__(self):
        if self.r_max <= 0:
            raise ConfigError("r_max must be > 0", key="r_max")
        if self.n_points < 64:
            raise ConfigError("n_points must be >= 64", key="n_points")

    @property
    def spacing(self) -> float:
        return self.r_max / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        h = self.spacing
        return (np.arange(self.n_points) + 0.5) * h

    @property
    def weights(self) -> np.ndarray:
        """Midpoint-rule measure 2 pi r h for transverse integrals."""
        return 2.0 * math.pi * self.nodes * self.spacing


@dataclass(frozen=True, eq=False)
class CondensateState:
    """Converged steady state.

    density is the longitudinal-peak 3D density (2/L) * n2d(rho) [1/m^3];
    the full 3D profile is density * sin^2(q pi (z+L/2)/L), so the volume
    integral of the 3D profile equals n_bec.  delta_t is the temperature rise
    [K]: midplane for curved runs, mode-weighted for flat runs.  mu is the
    chemical potential as an angular frequency offset [rad/s] relative to the
    beta = 0 reference of the same geometry (multiply by hbar for energy).
    """

    grid: RadialGrid
    geometry: str
    n_bec: float
    mu: float
    density: np.ndarray
    delta_t: np.ndarray
    radius: float
    radius_ref: float
    density_2d: np.ndarray = field(repr=False)
    iterations: int = 0
    residual: float = 0.0


# ---------------------------------------------------------------------------
# heat solvers
# ---------------------------------------------------------------------------

def _mode_orders(q: int) -> np.ndarray:
    """Odd z-mode orders kept in heat solves; covers the |c_n| spike near 2q
    and truncates where contributions scale below ~1e-9 of the leading mode."""
    return np.arange(1, max(6 * q + 27, 101) + 1, 2)


def _heating_rate(config: CavityConfig) -> float:
    """Source prefactor alpha_in c hbar omega_c / (n0 kappa) [K m]."""
    return (config.alpha_in * c * hbar * cutoff_frequency(config)
            / (config.n0 * config.kappa))


class _FlatHeatKernel:
    """Angular-averaged transverse heat kernels on a fixed grid.

    For each z-mode the convolution with K0(kappa_n |rho - rho'|)/(2 pi)
    reduces, after the angular integral, to I0(kappa_n r_<) K0(kappa_n r_>);
    scaled Bessel forms keep the product finite for kappa_n r >> 1.
    """

    def __init__(self, grid: RadialGrid, L: float, q: int):
        from scipy.special import i0e, k0e

        r = grid.nodes
        lo = np.minimum.outer(r, r)
        hi = np.maximum.outer(r, r)
        orders = _mode_orders(q)
        coeff = overlap_coefficients(q, orders)
        midplane_sign = np.sin(orders * math.pi / 2.0)
        weighted = np.zeros((grid.n_points, grid.n_points))
        midplane = np.zeros_like(weighted)
        for m, c_m, s_m in zip(orders, coeff, midplane_sign):
            kap = m * math.pi / L
            block = i0e(kap * lo) * k0e(kap * hi) * np.exp(kap * (lo - hi))
            weighted += (c_m * c_m) * block
            midplane += (s_m * c_m) * block
        self.weighted = -(2.0 / L) * weighted
        self.midplane = -(2.0 / L) * midplane
        self.measure = grid.nodes * grid.spacing

    def temperature(self, n2d: np.ndarray, heating: float, which: str = "weighted"):
        kernel = self.weighted if which == "weighted" else self.midplane
        return -heating * (kernel @ (n2d * self.measure))


class _ModalHeatSolver:
    """Per-z-mode axisymmetric screened-Poisson solve with T = 0 at r_max."""

    def __init__(self, grid: RadialGrid, L: float, q: int):
        self.grid = grid
        self.L = L
        self.orders = _mode_orders(q)
        self.coeff = overlap_coefficients(q, self.orders)
        self.midplane_sign = np.sin(self.orders * math.pi / 2.0)
        n, h = grid.n_points, grid.spacing
        r = grid.nodes
        faces = np.arange(n + 1) * h
        lower = faces[1:-1] / (r[1:] * h * h)          # coupling to i-1
        upper = faces[1:-1] / (r[:-1] * h * h)         # coupling to i+1
        diag = -(faces[:-1] + faces[1:]) / (r * h * h)
        diag[-1] -= faces[-1] / (r[-1] * h * h)        # Dirichlet face: half-cell
        self._lap = (diag, lower, upper)

    def _solve_mode(self, kap_sq: float, rhs: np.ndarray) -> np.ndarray:
        diag, lower, upper = self._lap
        n = self.grid.n_points
        ab = np.zeros((3, n))
        ab[0, 1:] = upper
        ab[1, :] = diag - kap_sq
        ab[2, :-1] = lower
        return solve_banded((1, 1), ab, rhs)

    def temperatures(self, n2d: np.ndarray, heating: float):
        """Returns (weighted <dT>, midplane dT)."""
        weighted = np.zeros_like(n2d)
        midplane = np.zeros_like(n2d)
        for m, c_m, s_m in zip(self.orders, self.coeff, self.midplane_sign):
            kap = m * math.pi / self.L
            rhs = -heating * (2.0 / self.L) * c_m * n2d
            t_m = self._solve_mode(kap * kap, rhs)
            weighted += c_m * t_m
            midplane += s_m * t_m
        return weighted, midplane


_HEAT_CACHE: dict = {}


def _flat_kernel(grid: RadialGrid, L: float, q: int) -> _FlatHeatKernel:
    key = ("flat", grid.r_max, grid.n_points, L, q)
    if key not in _HEAT_CACHE:
        _HEAT_CACHE[key] = _FlatHeatKernel(grid, L, q)
    return _HEAT_CACHE[key]


def _modal_solver(grid: RadialGrid, L: float, q: int) -> _ModalHeatSolver:
    key = ("modal", grid.r_max, grid.n_points, L, q)
    if key not in _HEAT_CACHE:
        _HEAT_CACHE[key] = _ModalHeatSolver(grid, L, q)
    return _HEAT_CACHE[key]


def temperature_from_density(density, grid: RadialGrid, config: CavityConfig,
                             spec: KernelSpec | None = None,
                             geometry: str = "flat") -> np.ndarray:
    """Stationary temperature rise [K] driven by a condensate density profile.

    density is the longitudinal-peak 3D density (2/L) n2d [1/m^3] on the grid
    nodes.  Flat geometry evaluates the mode-weighted temperature through the
    effective transverse kernel on the infinite plane; curved geometry runs
    the finite-difference Dirichlet solve and reports the midplane value.
    The result is nonnegative: the kernel is negative and the source positive.
    """
    density = np.asarray(density, float)
    if density.shape != (grid.n_points,):
        raise InputError("density must be sampled on the grid nodes")
    if not np.all(np.isfinite(density)):
        raise InputError("density contains non-finite values")
    if np.any(density < 0):
        raise InputError("density must be nonnegative")
    if spec is not None and (spec.L != config.L or spec.q != config.q):
        raise ConfigError("kernel spec disagrees with the cavity configuration")
    n2d = density * config.L / 2.0
    heating = _heating_rate(config)
    if geometry == "flat":
        return _flat_kernel(grid, config.L, config.q).temperature(n2d, heating)
    if geometry == "curved":
        _, midplane = _modal_solver(grid, config.L, config.q).temperatures(n2d, heating)
        return _clip_truncation_noise(midplane)
    raise ConfigError(f"unknown geometry {geometry!r}", key="geometry")


def _clip_truncation_noise(delta_t: np.ndarray) -> np.ndarray:
    """Zero out sub-1e-9 negative wiggles from the finite z-mode sum; the
    exact temperature rise is nonnegative everywhere."""
    peak = float(np.max(delta_t, initial=0.0))
    if peak <= 0.0:
        return np.maximum(delta_t, 0.0)
    if np.any(delta_t < -1e-9 * peak):
        raise ConvergenceError("temperature solve produced significant negative values")
    return np.maximum(delta_t, 0.0)


# ---------------------------------------------------------------------------
# transverse eigenproblem
# ---------------------------------------------------------------------------

class _RadialOperator:
    """Symmetrized kinetic tridiagonal -(hbar^2/2m) (1/r) d/dr (r d/dr) with a
    Dirichlet outer face; similarity transform u = sqrt(r) phi keeps it
    symmetric, and the r = 0 face carries zero flux (regularity)."""

    def __init__(self, grid: RadialGrid, m_ph: float):
        n, h = grid.n_points, grid.spacing
        r = grid.nodes
        faces = np.arange(n + 1) * h
        kin = hbar * hbar / (2.0 * m_ph)
        diag = (faces[:-1] + faces[1:]) / (r * h * h)
        diag[-1] += faces[-1] / (r[-1] * h * h)
        off = -faces[1:-1] / (h * h * np.sqrt(r[:-1] * r[1:]))
        self.kin_diag = kin * diag
        self.kin_off = kin * off
        self.grid = grid
        self.sqrt_r = np.sqrt(r)

    def ground_state(self, potential: np.ndarray):
        """Lowest eigenpair (E0 [J], phi normalized to sum(phi^2 w) = 1)."""
        vals, vecs = eigh_tridiagonal(self.kin_diag + potential, self.kin_off,
                                      select="i", select_range=(0, 0))
        u = vecs[:, 0]
        phi = u / self.sqrt_r
        norm = np.sum(phi * phi * self.grid.weights)
        phi = np.abs(phi) / math.sqrt(norm)
        return float(vals[0]), phi

    def apply(self, potential: np.ndarray, phi: np.ndarray) -> np.ndarray:
        u = self.sqrt_r * phi
        hu = (self.kin_diag + potential) * u
        hu[:-1] += self.kin_off * u[1:]
        hu[1:] += self.kin_off * u[:-1]
        return hu / self.sqrt_r

    def implicit_step(self, potential: np.ndarray, phi: np.ndarray,
                      dtau_over_hbar: float) -> np.ndarray:
        n = self.grid.n_points
        ab = np.zeros((3, n))
        ab[0, 1:] = dtau_over_hbar * self.kin_off
        ab[1, :] = 1.0 + dtau_over_hbar * (self.kin_diag + potential)
        ab[2, :-1] = dtau_over_hbar * self.kin_off
        u = solve_banded((1, 1), ab, self.sqrt_r * phi)
        return u / self.sqrt_r


def _wall_potential(grid: RadialGrid, m_ph: float) -> np.ndarray:
    r = grid.nodes
    r_wall = _WALL_ONSET * grid.r_max
    width = grid.r_max - r_wall
    ramp = np.clip((r - r_wall) / width, 0.0, None)
    scale = _WALL_STRENGTH * hbar * hbar * (math.pi / width) ** 2 / (2.0 * m_ph)
    return scale * ramp**4


def _geometry_potential(config: CavityConfig, grid: RadialGrid, geometry: str,
                        m_ph: float) -> np.ndarray:
    if geometry == "curved":
        omega = trap_frequency(config)
        return 0.5 * m_ph * omega * omega * grid.nodes**2
    return _wall_potential(grid, m_ph)


def _interaction_potential(config: CavityConfig, weighted_dt: np.ndarray) -> np.ndarray:
    m_ph = photon_mass(config)
    return -m_ph * (c / config.n0) ** 2 * (config.beta / config.n0) * weighted_dt


def _half_density_radius(grid: RadialGrid, density: np.ndarray) -> float:
    """Radius where the density falls to exp(-1/2) of its peak (interpolated)."""
    peak = float(density[0])
    if peak <= 0:
        return 0.0
    threshold = peak / math.sqrt(math.e)
    below = np.nonzero(density < threshold)[0]
    if len(below) == 0:
        return grid.r_max
    j = int(below[0])
    if j == 0:
        return float(grid.nodes[0])
    r = grid.nodes
    lo, hi = density[j - 1], density[j]
    if lo <= 0 or hi <= 0:
        frac = (lo - threshold) / (lo - hi)
    else:
        frac = (math.log(lo) - math.log(threshold)) / (math.log(lo) - math.log(hi))
    return float(r[j - 1] + frac * grid.spacing)


# ---------------------------------------------------------------------------
# self-consistent solvers
# ---------------------------------------------------------------------------

_REFERENCE_CACHE: dict = {}


def _reference_state(config: CavityConfig, grid: RadialGrid, geometry: str):
    """beta = 0 ground mode of the geometry potential: (E_ref, phi_ref)."""
    key = (geometry, grid.r_max, grid.n_points, config.L, config.R, config.q,
           config.n0)
    if key not in _REFERENCE_CACHE:
        m_ph = photon_mass(config)
        operator = _RadialOperator(grid, m_ph)
        v0 = _geometry_potential(config, grid, geometry, m_ph)
        _REFERENCE_CACHE[key] = (*operator.ground_state(v0), operator, v0)
    return _REFERENCE_CACHE[key]


def _total_photons(config: CavityConfig, n_bec: float, geometry: str,
                   grid: RadialGrid, r_bec_ref: float | None) -> tuple[float, float]:
    """Photon number placed on the grid, and the reference radius used.

    Flat runs quote n_bec as the number of photons in an area pi r_bec^2 (the
    interactionless curved-mirror condensate area), so the wall-confined disc
    carries n_bec (r_wall / r_bec)^2 photons and the average 2D density
    matches the curved-run convention.
    """
    if geometry == "curved":
        return n_bec, condensate_radius(config)
    if r_bec_ref is None:
        if config.is_flat:
            raise GeometryError(
                "flat solve needs r_bec_ref when the config has no curvature",
                key="R")
        r_bec_ref = condensate_radius(config)
    r_wall = _WALL_ONSET * grid.r_max
    return n_bec * (r_wall / r_bec_ref) ** 2, r_bec_ref


def _solve_self_consistent(config: CavityConfig, n_bec: float, grid: RadialGrid,
                           geometry: str, r_bec_ref=None, mixing: float = 0.3,
                           tol: float = 1e-8, max_iter: int = 400) -> CondensateState:
    if n_bec < 0:
        raise ConfigError("n_bec must be >= 0", key="n_bec")
    if geometry == "curved":
        if config.is_flat:
            raise GeometryError("curved solve needs a mirror curvature", key="R")
        r_bec = condensate_radius(config)
        if grid.r_max < 4.0 * r_bec:
            raise ConfigError("grid must extend to at least 4 r_bec", key="r_max")

    e_ref, phi_ref, operator, v_geom = _reference_state(config, grid, geometry)
    n_total, _ = _total_photons(config, n_bec, geometry, grid, r_bec_ref)
    heating = _heating_rate(config)
    radius_ref = _half_density_radius(grid, phi_ref**2)

    n2d = n_total * phi_ref**2
    mu = 0.0
    history = []
    if geometry == "flat":
        heat = _flat_kernel(grid, config.L, config.q)
    else:
        heat = _modal_solver(grid, config.L, config.q)

    if config.beta == 0.0 or n_total == 0.0:
        # no back-action: the reference mode is the solution, but a nonzero
        # photon number still heats the solvent
        dt_report = np.zeros(grid.n_points)
        if n_total > 0.0 and geometry == "curved":
            _, dt_report = heat.temperatures(n2d, heating)
            dt_report = _clip_truncation_noise(dt_report)
        elif n_total > 0.0:
            dt_report = heat.temperature(n2d, heating, "weighted")
        return CondensateState(
            grid=grid, geometry=geometry, n_bec=n_bec, mu=0.0,
            density=(2.0 / config.L) * n2d, delta_t=dt_report,
            radius=radius_ref, radius_ref=radius_ref,
            density_2d=n2d, iterations=0, residual=0.0)

    converged = False
    phi = phi_ref
    energy = e_ref
    for iteration in range(1, max_iter + 1):
        if geometry == "flat":
            weighted_dt = heat.temperature(n2d, heating, "weighted")
        else:
            weighted_dt, _ = heat.temperatures(n2d, heating)
        potential = v_geom + _interaction_potential(config, weighted_dt)
        energy, phi = operator.ground_state(potential)
        n2d_new = n_total * phi**2
        mu_new = (energy - e_ref) / hbar
        dmu = abs(mu_new - mu)
        dn = float(np.max(np.abs(n2d_new - n2d)) / np.max(n2d_new))
        history.append((dmu, dn))
        n2d = (1.0 - mixing) * n2d + mixing * n2d_new
        mu_scale = max(abs(mu_new), 1e-9 * abs(e_ref) / hbar)
        if _half_density_radius(grid, n2d) < 2.5 * grid.spacing:
            raise InstabilityError("density collapsed toward the grid scale")
        mu = mu_new
        if dmu <= tol * mu_scale and dn <= tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"fixed point not converged after {max_iter} iterations",
            history=history)

    n2d = n_total * phi**2
    if geometry == "flat":
        weighted_dt = heat.temperature(n2d, heating, "weighted")
        dt_report = weighted_dt
    else:
        weighted_dt, dt_report = heat.temperatures(n2d, heating)
        dt_report = _clip_truncation_noise(dt_report)
    potential = v_geom + _interaction_potential(config, weighted_dt)
    h_phi = operator.apply(potential, phi)
    residual = float(np.linalg.norm(h_phi - energy * phi)
                     / max(abs(energy), 1e-300) / np.linalg.norm(phi))
    return CondensateState(
        grid=grid, geometry=geometry, n_bec=n_bec, mu=mu,
        density=(2.0 / config.L) * n2d, delta_t=dt_report,
        radius=_half_density_radius(grid, n2d), radius_ref=radius_ref,
        density_2d=n2d, iterations=iteration, residual=residual)


def solve_flat(config: CavityConfig, n_bec: float, grid: RadialGrid,
               r_bec_ref: float | None = None, **kwargs) -> CondensateState:
    """Wall-confined condensate between flat mirrors with the non-local
    thermo-optic interaction; damped fixed-point iteration over
    density -> temperature -> lowest mode."""
    return _solve_self_consistent(config, n_bec, grid, "flat",
                                  r_bec_ref=r_bec_ref, **kwargs)


def solve_curved(config: CavityConfig, n_bec: float, grid: RadialGrid,
                 **kwargs) -> CondensateState:
    """Harmonically trapped condensate (curved mirrors); same fixed-point loop
    with the trap potential and the Dirichlet heat solve."""
    return _solve_self_consistent(config, n_bec, grid, "curved", **kwargs)


def observables(state: CondensateState) -> dict:
    """Interaction-induced shifts: {mu [rad/s], delta_r [m], delta_t_max [K]}."""
    return {
        "mu": state.mu,
        "delta_r": state.radius - state.radius_ref,
        "delta_t_max": float(np.max(state.delta_t, initial=0.0)),
    }


# ---------------------------------------------------------------------------
# independent solver route: imaginary-time relaxation
# ---------------------------------------------------------------------------

def imaginary_time_ground_state(config: CavityConfig, n_bec: float,
                                grid: RadialGrid, geometry: str = "flat",
                                r_bec_ref: float | None = None,
                                steps_max: int = 40000,
                                drift_tol: float = 1e-12) -> CondensateState:
    """Backward-Euler imaginary-time relaxation of the same 2D problem.

    The potential is refreshed from the instantaneous density every step, so
    the fixed point coincides with the self-consistent stationary state; the
    solve path (implicit diffusion steps + renormalization) is independent of
    the eigenvalue route.  The beta = 0 reference energy is likewise obtained
    by imaginary time.
    """
    if n_bec < 0:
        raise ConfigError("n_bec must be >= 0", key="n_bec")
    m_ph = photon_mass(config)
    operator = _RadialOperator(grid, m_ph)
    v_geom = _geometry_potential(config, grid, geometry, m_ph)
    n_total, _ = _total_photons(config, n_bec, geometry, grid, r_bec_ref)
    heating = _heating_rate(config)
    if geometry == "flat":
        heat = _flat_kernel(grid, config.L, config.q)
    else:
        heat = _modal_solver(grid, config.L, config.q)

    r = grid.nodes
    width = 0.3 * grid.r_max
    phi0 = np.exp(-0.5 * (r / width) ** 2)
    phi0 /= math.sqrt(np.sum(phi0**2 * grid.weights))

    def relax(include_interaction: bool):
        psi = phi0.copy()
        # backward Euler is unconditionally stable; scale the step to the
        # confinement energy of the start vector, not the wall height
        h_phi0 = operator.apply(v_geom, phi0)
        e_char = abs(float(np.sum(phi0 * h_phi0 * grid.weights)))
        dtau_over_hbar = 1.0 / e_char
        mu_prev = np.inf
        for step in range(steps_max):
            if include_interaction and config.beta != 0.0 and n_total > 0.0:
                n2d = n_total * psi**2
                if geometry == "flat":
                    weighted_dt = heat.temperature(n2d, heating, "weighted")
                else:
                    weighted_dt, _ = heat.temperatures(n2d, heating)
                potential = v_geom + _interaction_potential(config, weighted_dt)
            else:
                potential = v_geom
            psi = operator.implicit_step(potential, psi, dtau_over_hbar)
            psi = np.abs(psi)
            psi /= math.sqrt(np.sum(psi**2 * grid.weights))
            h_psi = operator.apply(potential, psi)
            mu_now = float(np.sum(psi * h_psi * grid.weights))
            if abs(mu_now - mu_prev) <= drift_tol * abs(mu_now):
                return mu_now, psi
            mu_prev = mu_now
        raise ConvergenceError("imaginary-time relaxation did not settle")

    e_ref, psi_ref = relax(include_interaction=False)
    if config.beta == 0.0 or n_total == 0.0:
        mu_energy, psi = e_ref, psi_ref
    else:
        mu_energy, psi = relax(include_interaction=True)
    n2d = n_total * psi**2
    if geometry == "flat":
        dt_report = heat.temperature(n2d, heating, "weighted")
    else:
        _, dt_report = heat.temperatures(n2d, heating)
        dt_report = _clip_truncation_noise(dt_report)
    return CondensateState(
        grid=grid, geometry=geometry, n_bec=n_bec,
        mu=(mu_energy - e_ref) / hbar,
        density=(2.0 / config.L) * n2d, delta_t=dt_report,
        radius=_half_density_radius(grid, n2d),
        radius_ref=_half_density_radius(grid, psi_ref**2),
        density_2d=n2d, iterations=0, residual=0.0)
