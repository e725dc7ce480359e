"""Exception types raised across the package."""


class QClockError(ValueError):
    """Base class for invalid-input errors."""


class NonHermitianInput(QClockError):
    pass


class DimensionMismatch(QClockError):
    pass


class InvalidDuration(QClockError):
    pass


class InvalidGrid(QClockError):
    pass


class BranchDomain(QClockError):
    """Argument lies outside the domain where the principal branch is used."""


class InvalidOrder(QClockError):
    pass


class OverflowSaturation(QClockError, OverflowError):
    """Result exceeds the largest representable double."""


class InvalidThreshold(QClockError):
    pass


class InvalidTime(QClockError):
    pass


class InsufficientSamples(QClockError):
    pass


class StepTooLarge(QClockError):
    """Integrator trace drift exceeded its hard limit."""


class ConvergenceWarning(UserWarning):
    """A truncated series is evaluated outside its radius of convergence."""
