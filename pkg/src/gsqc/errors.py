"""Exception types shared across the package."""


class GSQCError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GSQCError, ValueError):
    """Structural misuse: bad ids, rows out of range, reused columns."""


class ValidationError(GSQCError, ValueError):
    """A numeric precondition failed (non-unitary gate, unnormalized vector, ...)."""


class CapacityError(GSQCError):
    """A requested dimension or enumeration exceeds a configured limit."""

    def __init__(self, message, required=None, limit=None):
        super().__init__(message)
        self.required = required
        self.limit = limit


class ConvergenceError(GSQCError, RuntimeError):
    """The iterative eigensolver hit its iteration cap."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateConditioningError(GSQCError, ValueError):
    """Conditioning on an event whose probability is numerically zero."""

    def __init__(self, message, probability=None):
        super().__init__(message)
        self.probability = probability
