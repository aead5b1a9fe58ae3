class ConditioningError(ArithmeticError):
    """Raised when conditioning on an outcome of (numerically) zero probability."""
