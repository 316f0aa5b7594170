class ParameterError(ValueError):
    """Raised when an input violates a documented precondition."""


class StateError(ValueError):
    """Raised when a quadrature state is not a valid covariance."""


class FitError(RuntimeError):
    """Raised when a least-squares fit cannot produce an estimate."""
