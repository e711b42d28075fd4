"""Exception types raised across the package."""


class CapacityError(ValueError):
    """A cylinder basis would exceed the configured size cap."""


class DepthError(ValueError):
    """A function or measure is used at a depth it cannot support."""


class DepthBudgetExceeded(DepthError):
    """An algebra term does not fit the working depth."""

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class PositivityError(ValueError):
    """A potential that must be strictly positive is not."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ParameterError(ValueError):
    """Invalid model parameters (e.g. Fisher-Felderhof gamma out of range)."""


class FunctionClassError(ValueError):
    """A function is outside the class an operation accepts."""


class DivergenceError(ParameterError):
    """A series that must converge does not (e.g. zeta at gamma <= 1)."""


class IntegrabilityError(ParameterError):
    """An eigenfunction is not integrable for the given parameters."""


class ConfigError(ValueError):
    """A run configuration is malformed or refers to missing files."""
