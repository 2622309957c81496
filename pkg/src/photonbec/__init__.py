"""Photon-condensate steady states and excitations under a thermo-optic
(non-local, delayed) effective interaction in a dye microcavity."""

__version__ = "0.1.0"

from .params import CavityConfig, DerivedQuantities, default_config, derive
from .greens import (KernelSpec, KernelEval, greens_3d, greens_2d_effective,
                     kernel_static, kernel_delayed)
from .steady import (RadialGrid, CondensateState, solve_flat, solve_curved,
                     temperature_from_density, observables,
                     imaginary_time_ground_state)
from .bogoliubov import (UniformCondensate, DispersionPoint, ScanTable,
                         peak_density, dispersion_static, dispersion_delayed,
                         dispersion_sweep, critical_momentum,
                         critical_velocity, scan)

__all__ = [
    "__version__",
    "CavityConfig", "DerivedQuantities", "default_config", "derive",
    "KernelSpec", "KernelEval", "greens_3d", "greens_2d_effective",
    "kernel_static", "kernel_delayed",
    "RadialGrid", "CondensateState", "solve_flat", "solve_curved",
    "temperature_from_density", "observables", "imaginary_time_ground_state",
    "UniformCondensate", "DispersionPoint", "ScanTable", "peak_density",
    "dispersion_static", "dispersion_delayed", "dispersion_sweep",
    "critical_momentum", "critical_velocity", "scan",
]
