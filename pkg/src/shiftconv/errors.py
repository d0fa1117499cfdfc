"""Exception hierarchy shared by all modules."""


class ShiftconvError(Exception):
    """Base class for library errors."""


class ResourceError(ShiftconvError):
    """A requested table or grid exceeds the supported capacity."""


class DataIntegrityError(ShiftconvError):
    """Stored or generated data violates an invariant (checksum, Deligne bound)."""


class DomainError(ShiftconvError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class TruncationError(ShiftconvError):
    """A truncated series does not cover the requested argument."""


class SingularityError(DomainError):
    """Evaluation too close to a pole."""


class DegenerateStationaryPointError(ShiftconvError):
    """A stationary point with vanishing second derivative."""


class NumericError(ShiftconvError):
    """Quadrature or iteration failed to reach the requested tolerance.

    ``estimate`` and ``error`` carry the best value found and its error estimate.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConfigError(ShiftconvError, ValueError):
    """Invalid run configuration."""
