"""Exception and warning types shared across the package."""


class SmlocError(Exception):
    """Base class for package errors."""


class InvalidInputError(SmlocError, ValueError):
    """Malformed arguments: dimension mismatch, bad weights, zero direction."""


class InfeasibleError(SmlocError):
    """The set being measured is empty."""


class SolverError(SmlocError):
    """The conic solver could not reach even the degenerate tolerance."""


class BoundViolationError(SmlocError):
    """An exact quantity exceeded one of its certified upper bounds."""


class DegenerateInteriorWarning(RuntimeWarning):
    """The set is nonempty but has (numerically) empty interior."""
