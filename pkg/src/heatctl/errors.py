class HeatCtlError(Exception):
    """Base class for all library errors."""


class OutOfRangeError(HeatCtlError, ValueError):
    pass


class DomainError(HeatCtlError, ValueError):
    pass


class DegenerateGridError(HeatCtlError, ValueError):
    pass


class ConvergenceError(HeatCtlError, RuntimeError):
    def __init__(self, message, residual=None, history=None):
        super().__init__(message)
        self.residual = residual
        self.history = history or []


class TailDivergenceError(HeatCtlError, ValueError):
    pass


class DependencyError(HeatCtlError, ValueError):
    pass


class ConfigError(HeatCtlError, ValueError):
    pass


class CoefficientEvaluationError(HeatCtlError, ValueError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class ConditioningWarning(UserWarning):
    """Least-squares system is close to singular."""
