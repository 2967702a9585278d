"""Exception types raised across the package."""


class InvalidExponentError(ValueError):
    """An exponent is outside the admissible range (e.g. r <= 1)."""


class DimensionMismatchError(ValueError):
    """Array shapes do not match the object they are applied to."""


class InfeasibleTargetError(ValueError):
    """A Bregman distance was requested at a point where the penalty is infinite."""


class NumericalFailure(ArithmeticError):
    """A non-finite value appeared in an iterative computation.

    Parameters
    ----------
    message : str
        Human readable description.
    iteration : int, optional
        Outer iteration at which the failure happened.
    history : object, optional
        Telemetry collected up to the failure.
    """

    def __init__(self, message, iteration=None, history=None):
        super().__init__(message)
        self.iteration = iteration
        self.history = history


class ConvergenceError(RuntimeError):
    """An inner solver did not reach its tolerance within its iteration budget."""


class InvalidBatchError(ValueError):
    """Requested batch size is incompatible with the number of equations."""


class ConfigError(ValueError):
    """Invalid experiment or solver configuration."""
