"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A distribution or operator parameter lies outside its valid domain."""


class ShapeError(ValueError):
    """Array lengths or image shapes are inconsistent."""


class StateError(RuntimeError):
    """Numerical state became invalid (non-finite, non-positive, ...)."""


class SPDError(StateError):
    """Factorization of a matrix that should be positive definite failed."""

    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (leading minor {pivot} failed)")


class CapacityError(RuntimeError):
    """Problem is too large for the requested method."""


class DegenerateGradientError(StateError):
    """Reflection requested against a (numerically) zero gradient."""


class DataFormatError(OSError):
    """An input file is missing its sidecar, malformed, or truncated."""
