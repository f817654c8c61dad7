"""Exception types raised across the package."""


class CCScatterError(Exception):
    """Base class for all package errors."""


class ConfigError(CCScatterError, ValueError):
    """Invalid or inconsistent configuration / parameters."""


class ResonanceError(CCScatterError):
    """The expansion recursion hit a vanishing denominator.

    Raised when the working exponent e(y) satisfies n - 2e(y) - k = 0 (to
    tolerance) at a point of the support of the boundary data.
    """

    def __init__(self, message, y_values=(), k=None):
        super().__init__(message)
        self.y_values = tuple(y_values)
        self.k = k


class DegenerateFit(CCScatterError):
    """An exponent or coefficient fit is not determined by the data."""


class PoleError(CCScatterError):
    """Evaluation too close to a pole of the Gamma function."""


class NonConvergence(CCScatterError):
    """A linear solve did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SymbolicOrderError(CCScatterError):
    """Two symbolic index offsets cannot be ordered under n >= 1."""


class IntegrabilityError(CCScatterError):
    """Push-forward positivity fails at a face mapped to the interior."""
