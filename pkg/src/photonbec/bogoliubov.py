"""Elementary excitations of the uniform condensate with the non-local
(and optionally delayed) thermo-optic interaction.

Around a uniform condensate the fluctuation spectrum has the Bogoliubov form

    Omega(k) = (1/hbar) sqrt( eps_k ( eps_k + X(k) ) ),  eps_k = hbar^2 k^2 / 2 m

with the momentum-resolved interaction energy

    X(k) = 2 n2 g0 Ghat(k),   n2 = peak_density * L  [1/m^2],
    g0  = (hbar omega_c)^2 alpha_in beta c / (n0^2 kappa)  [J m].

beta < 0 and Ghat < 0 make X > 0 (repulsive): sound-like at low k with speed
sqrt(n2 g0 Ghat(0) / m), free-particle-like at high k.  With the delayed
kernel Ghat(Omega, k) the dispersion becomes transcendental in complex Omega
and is solved by damped Newton iteration; for every root Omega, -conj(Omega)
is also a root, and the branch with Re Omega >= 0 is reported.

The critical momentum k_c is the fixed point where the two terms in the
parenthesis balance, eps_k = |X(k_c)|, i.e.

    k_c = (2 omega_c / n0) sqrt(peak_density) sqrt(L m_ph alpha_in beta c
          Ghat(k_c) / kappa),

solved by bracketing; in delayed mode Ghat is evaluated at the co-solved root
Omega(k_c) and enters through its magnitude, which is bounded by the static
kernel, so delayed k_c never exceeds static k_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c, hbar
from scipy.optimize import brentq

from .errors import (BranchError, ConfigError, DegenerateInteractionError,
                     FitQualityError, GeometryError, ImaginaryBranchError,
                     RootNotFoundError, ScanPointError)
from .greens import KernelSpec, kernel_delayed_and_derivative, kernel_static
from .params import CavityConfig, condensate_radius, cutoff_frequency, photon_mass

__all__ = [
    "UniformCondensate",
    "DispersionPoint",
    "ScanTable",
    "peak_density",
    "dispersion_static",
    "dispersion_delayed",
    "dispersion_sweep",
    "critical_momentum",
    "critical_velocity",
    "scan",
]

_MODES = ("static", "delayed")
_FIT_WINDOW = (0.01, 0.1)
_FIT_POINTS = 20
_FIT_RESIDUAL_MAX = 0.05


def peak_density(n_bec: float, config: CavityConfig,
                 r_bec: float | None = None) -> float:
    """Longitudinally averaged peak condensate density n_bec/(pi r_bec^2 L)
    [1/m^3]; r_bec defaults to the curved-mirror interactionless radius."""
    if n_bec < 0:
        raise ConfigError("n_bec must be >= 0", key="n_bec")
    if r_bec is None:
        if config.is_flat:
            raise GeometryError(
                "peak density needs r_bec explicitly for flat mirrors", key="R")
        r_bec = condensate_radius(config)
    return n_bec / (math.pi * r_bec * r_bec * config.L)


@dataclass(frozen=True)
class UniformCondensate:
    """Uniform-condensate backdrop for the excitation problem."""

    peak_density: float
    config: CavityConfig

    def __post_init__(self):
        if self.peak_density < 0:
            raise ConfigError("peak_density must be >= 0", key="peak_density")

    @classmethod
    def from_photon_number(cls, n_bec: float, config: CavityConfig,
                           r_bec: float | None = None) -> "UniformCondensate":
        return cls(peak_density=peak_density(n_bec, config, r_bec), config=config)

    @property
    def m_ph(self) -> float:
        return photon_mass(self.config)

    @property
    def omega_c(self) -> float:
        return cutoff_frequency(self.config)

    def coupling(self) -> float:
        """2 n2 g0 [J/m]: interaction energy per unit of Ghat [m] (negative)."""
        cfg = self.config
        g0 = (hbar * self.omega_c) ** 2 * cfg.alpha_in * cfg.beta * c / (
            cfg.n0 ** 2 * cfg.kappa)
        return 2.0 * (self.peak_density * cfg.L) * g0

    def free_omega(self, k: float) -> float:
        """Free-particle branch hbar k^2 / 2 m [rad/s]."""
        return hbar * k * k / (2.0 * self.m_ph)


@dataclass(frozen=True)
class DispersionPoint:
    k: float
    omega: complex
    branch: str
    residual: float


@dataclass(frozen=True, eq=False)
class ScanTable:
    """Ordered (swept value, k_critical [1/m], v_critical [m/s]) records."""

    swept_parameter: str
    unit: str
    rows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        values = [row[0] for row in self.rows]
        if values != sorted(values):
            raise ConfigError("scan rows must be ordered by swept value")
        for row in self.rows:
            if not all(math.isfinite(x) and x >= 0 for x in row[1:]):
                raise ConfigError("scan entries must be finite and nonnegative")


def _interaction_static(k: float, cond: UniformCondensate, spec: KernelSpec):
    """X(k) [J] and the kernel eval behind it."""
    ev = kernel_static(k, spec)
    return cond.coupling() * ev.value, ev


def _residual_scale(omega: complex, eps_over_hbar: float) -> float:
    return max(abs(omega) ** 2, eps_over_hbar ** 2, 1e-300)


def dispersion_static(k: float, cond: UniformCondensate,
                      spec: KernelSpec) -> DispersionPoint:
    """Instantaneous-kernel dispersion; real Omega >= 0.

    Zero density gives the free-particle branch exactly.  A negative
    discriminant (possible only for attractive signs, beta > 0) raises
    ImaginaryBranchError.
    """
    if k < 0:
        raise ConfigError("k must be >= 0")
    eps = hbar * hbar * k * k / (2.0 * cond.m_ph)
    if cond.peak_density == 0.0 or k == 0.0:
        return DispersionPoint(k=k, omega=complex(cond.free_omega(k)),
                               branch="static", residual=0.0)
    x_k, _ = _interaction_static(k, cond, spec)
    disc = eps * (eps + x_k)
    if disc < 0.0:
        raise ImaginaryBranchError(
            "static dispersion has Omega^2 < 0 (attractive interaction)")
    omega = math.sqrt(disc) / hbar
    residual = abs(omega**2 - eps * (eps + x_k) / hbar**2) / _residual_scale(
        omega, eps / hbar)
    return DispersionPoint(k=k, omega=complex(omega), branch="static",
                           residual=residual)


def dispersion_delayed(k: float, cond: UniformCondensate, spec: KernelSpec,
                       seed: complex | None = None, newton_tol: float = 1e-10,
                       max_iter: int = 80) -> DispersionPoint:
    """Root of the transcendental delayed dispersion

        F(Omega) = Omega^2 - (eps_k/hbar^2) (eps_k + 2 n2 g0 Ghat(Omega, k))

    by damped Newton from the seed (static-branch Omega by default), polished
    to |F| <= newton_tol relative; the Re Omega >= 0 representative of the
    (Omega, -Omega*) pair is returned.
    """
    if k < 0:
        raise ConfigError("k must be >= 0")
    eps = hbar * hbar * k * k / (2.0 * cond.m_ph)
    if cond.peak_density == 0.0 or k == 0.0:
        return DispersionPoint(k=k, omega=complex(cond.free_omega(k)),
                               branch="delayed", residual=0.0)
    coupling = cond.coupling()
    if seed is None:
        seed = dispersion_static(k, cond, spec).omega
    omega = complex(seed)
    if omega == 0:
        omega = complex(eps / hbar)

    def f_and_df(om):
        ev, dg = kernel_delayed_and_derivative(om, k, spec)
        f = om * om - (eps / hbar**2) * (eps + coupling * ev.value)
        df = 2.0 * om - (eps / hbar**2) * coupling * dg
        return f, df

    scale = _residual_scale(omega, eps / hbar)
    trace = [omega]
    f, df = f_and_df(omega)
    for _ in range(max_iter):
        if abs(f) <= newton_tol * scale:
            break
        if df == 0:
            raise RootNotFoundError("Newton derivative vanished", trace=trace)
        step = f / df
        lam = 1.0
        while lam >= 1.0 / 64.0:
            cand = omega - lam * step
            f_new, df_new = f_and_df(cand)
            if abs(f_new) < abs(f):
                omega, f, df = cand, f_new, df_new
                break
            lam /= 2.0
        else:
            raise RootNotFoundError("damped Newton made no progress", trace=trace)
        trace.append(omega)
        scale = _residual_scale(omega, eps / hbar)
    else:
        raise RootNotFoundError(
            f"no root after {max_iter} Newton iterations", trace=trace)
    if omega.real < 0:
        omega = -omega.conjugate()
        f, _ = f_and_df(omega)
    return DispersionPoint(k=k, omega=omega, branch="delayed",
                           residual=abs(f) / _residual_scale(omega, eps / hbar))


def dispersion_sweep(ks, cond: UniformCondensate, spec: KernelSpec,
                     mode: str = "static") -> list[DispersionPoint]:
    """Dispersion on an ascending k grid; delayed roots are continued from the
    previous k to stay on one branch, with a continuity check."""
    if mode not in _MODES:
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    points = []
    seed = None
    for k in ks:
        if mode == "static":
            pt = dispersion_static(float(k), cond, spec)
        else:
            pt = dispersion_delayed(float(k), cond, spec, seed=seed)
            seed = pt.omega
        if points:
            prev = points[-1]
            jump = abs(pt.omega - prev.omega)
            # allow the free-particle growth between grid points on top of a
            # fractional change; a hop to the -conj branch still trips this
            allowed = (0.75 * (abs(pt.omega) + abs(prev.omega))
                       + 1.5 * abs(cond.free_omega(float(k))
                                   - cond.free_omega(prev.k)) + 1e-300)
            if jump > allowed:
                raise BranchError(
                    f"dispersion jumped between k={prev.k:g} and k={k:g}")
        points.append(pt)
    return points


def critical_momentum(cond: UniformCondensate, spec: KernelSpec,
                      mode: str = "static", rel_tol: float = 1e-10) -> float:
    """Momentum where the kinetic and interaction terms of the dispersion
    balance: eps_k = |X(k)| (delayed mode co-solves Omega(k))."""
    if mode not in _MODES:
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    if cond.peak_density == 0.0:
        return 0.0
    x0, _ = _interaction_static(0.0, cond, spec)
    if x0 <= 0.0:
        raise DegenerateInteractionError(
            "no positive critical momentum: interaction is not repulsive")
    eps_coeff = hbar * hbar / (2.0 * cond.m_ph)

    def gap(k):
        if mode == "static":
            x_k, _ = _interaction_static(k, cond, spec)
        else:
            omega = dispersion_delayed(k, cond, spec).omega
            ev, _ = kernel_delayed_and_derivative(omega, k, spec)
            x_k = abs(cond.coupling() * ev.value)
        return eps_coeff * k * k - abs(x_k)

    k_flat = math.sqrt(x0 / eps_coeff)  # balance point if Ghat stayed at Ghat(0)
    hi = k_flat
    for _ in range(200):
        if gap(hi) > 0:
            break
        hi *= 2.0
    else:
        raise DegenerateInteractionError("no positive critical momentum found")
    lo = 1e-8 * k_flat
    if gap(lo) >= 0:
        raise DegenerateInteractionError("interaction balance inverted at low k")
    return float(brentq(gap, lo, hi, rtol=rel_tol, maxiter=200))


def critical_velocity(cond: UniformCondensate, spec: KernelSpec,
                      mode: str = "static", k_c: float | None = None,
                      with_residual: bool = False):
    """Sound velocity: zero-intercept least-squares slope of Re Omega(k) over
    k in [0.01, 0.1] k_c (20 points).  Raises FitQualityError if the window is
    not linear to 5% (the strongly delayed regime is sub-linear there)."""
    if cond.peak_density == 0.0:
        return (0.0, 0.0) if with_residual else 0.0
    if k_c is None:
        k_c = critical_momentum(cond, spec, mode)
    ks = np.linspace(_FIT_WINDOW[0], _FIT_WINDOW[1], _FIT_POINTS) * k_c
    re_omega = np.array([pt.omega.real
                         for pt in dispersion_sweep(ks, cond, spec, mode)])
    slope = float(np.sum(ks * re_omega) / np.sum(ks * ks))
    residual = float(np.sqrt(np.sum((re_omega - slope * ks) ** 2)
                             / np.sum(re_omega**2)))
    if residual > _FIT_RESIDUAL_MAX:
        raise FitQualityError(
            f"low-k dispersion not linear (fit residual {residual:.1%})",
            residual=residual)
    return (slope, residual) if with_residual else slope


def scan(axis: str, values, n_bec: float, config: CavityConfig,
         mode: str = "static", velocity_mode: str | None = None,
         rel_tol: float = 1e-10) -> ScanTable:
    """critical_momentum and critical_velocity along one swept parameter.

    axis is one of alpha_in, L, n_bec; other parameters are held at the given
    config / photon number.  velocity_mode may differ from mode (the delayed
    velocity fit is rejected by its quality gate in strongly delayed regimes).
    Per-point failures re-raise as ScanPointError with the offending value.
    """
    units = {"alpha_in": "1/m", "L": "m", "n_bec": ""}
    if axis not in units:
        raise ConfigError(f"unknown scan axis {axis!r}", key="axis")
    values = [float(v) for v in values]
    if any(v <= 0 for v in values) or values != sorted(values):
        raise ConfigError("scan range must be positive and ascending")
    velocity_mode = velocity_mode or mode
    rows = []
    for value in values:
        try:
            cfg = config if axis == "n_bec" else config.replace(**{axis: value})
            n = value if axis == "n_bec" else n_bec
            cond = UniformCondensate.from_photon_number(n, cfg)
            spec = KernelSpec.from_config(cfg, rel_tol=rel_tol)
            k_c = critical_momentum(cond, spec, mode)
            if velocity_mode == mode:
                v_c = critical_velocity(cond, spec, mode, k_c=k_c)
            else:
                v_c = critical_velocity(cond, spec, velocity_mode)
            rows.append((value, k_c, v_c))
        except Exception as exc:
            raise ScanPointError(f"scan failed at {axis} = {value:g}: {exc}",
                                 value=value, cause=exc) from exc
    return ScanTable(swept_parameter=axis, unit=units[axis], rows=tuple(rows))
