"""Cavity parameters and derived single-particle quantities.

A dye-filled microcavity with mirror spacing L and longitudinal mode order q
confines photons to a single longitudinal mode, which makes the transverse
motion that of a 2D massive boson: m_ph = hbar*k_z*n0/c with k_z = q*pi/L.
Curved mirrors (radius R) add a harmonic trap of frequency
Omega = (c/n0)/sqrt(L*R/2).  All quantities are SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace

from scipy.constants import c, hbar, k as k_B

from .errors import ConfigError, GeometryError

__all__ = [
    "CavityConfig",
    "DerivedQuantities",
    "default_config",
    "photon_mass",
    "cutoff_frequency",
    "trap_frequency",
    "critical_photon_number",
    "condensate_radius",
    "derive",
]

# Methanol-solvent defaults for a 1 mM R6G cavity: mirror spacing 2 um,
# mode order 9, bath at room temperature, 1 m mirror curvature.
_DEFAULTS = dict(
    L=2e-6,
    R=1.0,
    q=9,
    n0=1.33,
    beta=-4.8e-4,
    kappa=0.168,
    cv=1.9e6,
    alpha_in=0.63,
    T=300.0,
)


@dataclass(frozen=True)
class CavityConfig:
    """Physical inputs in SI units.

    L        mirror spacing [m]
    R        mirror radius of curvature [m]; None means flat mirrors
    q        longitudinal mode order
    n0       refractive index of the solvent
    beta     thermo-optic coefficient dn/dT [1/K] (negative for methanol)
    kappa    thermal conductivity [W/(m K)]
    cv       volumetric heat capacity [J/(K m^3)]
    alpha_in inelastic absorption coefficient [1/m]
    T        bath temperature [K]
    """

    L: float
    R: float | None
    q: int
    n0: float
    beta: float
    kappa: float
    cv: float
    alpha_in: float
    T: float

    def __post_init__(self):
        checks = [
            ("L", self.L > 0, "L must be > 0"),
            ("q", isinstance(self.q, int) and self.q >= 1, "q must be an integer >= 1"),
            ("n0", self.n0 >= 1, "n0 must be >= 1"),
            ("kappa", self.kappa > 0, "kappa must be > 0"),
            ("cv", self.cv > 0, "cv must be > 0"),
            ("alpha_in", self.alpha_in >= 0, "alpha_in must be >= 0"),
            ("T", self.T > 0, "T must be > 0"),
            ("R", self.R is None or self.R > 0, "R must be > 0 when present"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(msg, key=key)
        for key in ("L", "n0", "beta", "kappa", "cv", "alpha_in", "T"):
            if not math.isfinite(getattr(self, key)):
                raise ConfigError(f"{key} must be finite", key=key)

    @property
    def is_flat(self) -> bool:
        return self.R is None

    @property
    def diffusivity(self) -> float:
        """Thermal diffusivity kappa/cv [m^2/s]."""
        return self.kappa / self.cv

    def replace(self, **kwargs) -> "CavityConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


def default_config(**overrides) -> CavityConfig:
    """Built-in defaults (see module docstring), with optional field overrides."""
    values = dict(_DEFAULTS)
    for key, val in overrides.items():
        if key not in values:
            raise ConfigError(f"unknown configuration key {key!r}", key=key)
        values[key] = val
    return CavityConfig(**values)


@dataclass(frozen=True)
class DerivedQuantities:
    """Single-particle quantities computed from a CavityConfig (SI)."""

    m_ph: float        # effective photon mass [kg]
    omega_c: float     # cutoff angular frequency [rad/s]
    k_z: float         # longitudinal wavevector [1/m]
    omega_trap: float  # trap angular frequency [rad/s]
    n_c: float         # critical photon number
    r_bec: float       # interactionless condensate radius [m]
    diffusivity: float # kappa/cv [m^2/s]

    def to_dict(self) -> dict:
        return asdict(self)


def photon_mass(config: CavityConfig) -> float:
    """Effective mass hbar*(q*pi/L)*n0/c [kg]."""
    k_z = config.q * math.pi / config.L
    return hbar * k_z * config.n0 / c


def cutoff_frequency(config: CavityConfig) -> float:
    """Cutoff angular frequency omega_c = k_z*c/n0 [rad/s].

    Equivalent to m_ph = hbar*omega_c*(n0/c)^2.  The condensate is taken to
    oscillate at the cutoff, so omega_c is the frequency entering the heating
    and interaction strengths.
    """
    return (config.q * math.pi / config.L) * c / config.n0


def trap_frequency(config: CavityConfig) -> float:
    """Harmonic trap frequency (c/n0)/sqrt(L*R/2) [rad/s]; needs curved mirrors."""
    if config.is_flat:
        raise GeometryError("trap frequency undefined for flat mirrors", key="R")
    return (c / config.n0) / math.sqrt(config.L * config.R / 2.0)


def critical_photon_number(config: CavityConfig) -> float:
    """Condensation threshold (pi^2/3)*(k_B*T/(hbar*Omega))^2 for the 2D trapped gas.

    Includes the two-fold polarization degeneracy.
    """
    omega = trap_frequency(config)
    return (math.pi**2 / 3.0) * (k_B * config.T / (hbar * omega)) ** 2


def condensate_radius(config: CavityConfig) -> float:
    """Gaussian 1/sqrt(e) density radius sqrt(hbar/(2*m_ph*Omega)) of the
    interactionless trapped ground mode [m]."""
    omega = trap_frequency(config)
    return math.sqrt(hbar / (2.0 * photon_mass(config) * omega))


def derive(config: CavityConfig) -> DerivedQuantities:
    """All derived quantities at once; needs curved mirrors for the trap set."""
    return DerivedQuantities(
        m_ph=photon_mass(config),
        omega_c=cutoff_frequency(config),
        k_z=config.q * math.pi / config.L,
        omega_trap=trap_frequency(config),
        n_c=critical_photon_number(config),
        r_bec=condensate_radius(config),
        diffusivity=config.diffusivity,
    )
