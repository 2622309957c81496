"""Exception types shared across the package."""


class PhotonBECError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PhotonBECError):
    """Invalid or inconsistent input parameters; carries the offending key."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class GeometryError(ConfigError):
    """Operation needs curved mirrors (R) but the configuration is flat."""


class SingularityError(PhotonBECError):
    """Kernel evaluated at a point where it diverges."""


class TruncationError(PhotonBECError):
    """Requested tolerance not reached within the term budget."""

    def __init__(self, message, achieved_bound=None, terms_used=None):
        super().__init__(message)
        self.achieved_bound = achieved_bound
        self.terms_used = terms_used


class NearPoleError(PhotonBECError):
    """Delayed-kernel denominator too close to zero for a reliable value."""


class InputError(PhotonBECError):
    """Non-finite or otherwise unusable field data."""


class ConvergenceError(PhotonBECError):
    """Self-consistent iteration failed to converge; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class InstabilityError(PhotonBECError):
    """Density collapsed toward the grid scale during iteration."""


class ImaginaryBranchError(PhotonBECError):
    """Instantaneous-kernel dispersion would require Omega^2 < 0."""


class RootNotFoundError(PhotonBECError):
    """Complex Newton iteration did not converge; carries the iterate trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class BranchError(PhotonBECError):
    """Root found on the wrong dispersion branch (continuity check failed)."""


class DegenerateInteractionError(PhotonBECError):
    """No positive critical-momentum fixed point exists."""


class FitQualityError(PhotonBECError):
    """Low-momentum dispersion is not linear enough for a sound-velocity fit."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ScanPointError(PhotonBECError):
    """A parameter-scan point failed; carries the swept value and the cause."""

    def __init__(self, message, value=None, cause=None):
        super().__init__(message)
        self.value = value
        self.cause = cause


class PartialFigureError(PhotonBECError):
    """More than the tolerated fraction of figure points failed."""

    def __init__(self, message, manifest=None):
        super().__init__(message)
        self.manifest = manifest
