"""Exception hierarchy shared by every module."""


class GNSError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(GNSError):
    """Incompatible grids, ranks or shapes."""


class ResolutionError(GNSError):
    """The requested operation is not resolved by the grid."""


class DomainError(GNSError):
    """An argument lies outside the domain where an operation is defined."""


class ConfigurationError(GNSError):
    """A configuration choice makes an operation ill-posed."""


class ConstraintError(GNSError):
    """A parameter violates a validity constraint.

    ``param`` names the offending parameter.
    """

    def __init__(self, param, message):
        super().__init__(f"{param}: {message}")
        self.param = param


class LadderError(GNSError):
    """The smallness bound needed to build a ladder level fails."""

    def __init__(self, level, value, bound):
        super().__init__(
            f"level {level}: |S(Phi)/(N^(2 alpha) eps^2)| = {value:.6g} exceeds {bound:.6g}"
        )
        self.level = level
        self.value = value
        self.bound = bound


class BlowUpError(GNSError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, t, message="non-finite values"):
        super().__init__(f"t = {t:.6g}: {message}")
        self.t = t


class NonContractionError(GNSError):
    """A fixed-point iteration stopped contracting.

    ``history`` holds the per-iteration diagnostics gathered so far.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class FormatError(GNSError):
    """Malformed or incompatible field file."""


class CutoffError(GNSError):
    """Dyadic cutoff functions fail their partition identities."""


class EmptyBlockWarning(UserWarning):
    """A dyadic block lies entirely beyond the grid's resolved band."""
