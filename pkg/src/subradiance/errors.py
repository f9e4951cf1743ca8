"""Exception types raised by the numerical layers."""


class NumericFailureError(ArithmeticError):
    """A numerical routine did not produce a trustworthy result."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IllConditionedError(NumericFailureError):
    """The eigenvector matrix is numerically singular (near-defective input)."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class AmbiguousDominanceError(RuntimeError):
    """No eigenmode carries enough weight to define a dominant decay."""
