class ConvexFreqError(Exception):
    """Base class for library errors."""


class InvalidScaleError(ConvexFreqError, ValueError):
    pass


class DomainError(ConvexFreqError, ValueError):
    """Point outside the region where a field is defined."""


class DegenerateError(ConvexFreqError):
    """Vanishing height, normalization or mass."""


class SolverError(ConvexFreqError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DisjointnessError(ConvexFreqError, ValueError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ConfigError(ConvexFreqError, ValueError):
    pass


class NotCriticalError(ConvexFreqError, ValueError):
    """Point is not a flat boundary critical point."""
