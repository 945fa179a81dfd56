"""
Exception hierarchy shared by every perpsim module.

The CLI maps each family to an exit code:

- 2: ConfigError, ModelError, PreconditionError
- 3: LyapunovRefusal
- 4: NumericError and its subclasses
"""


class PerpsimError(Exception):
    """Base class of all perpsim errors."""

    exit_code = 1


class ConfigError(PerpsimError, ValueError):
    exit_code = 2


class ModelError(PerpsimError, ValueError):
    exit_code = 2


class PreconditionError(PerpsimError, ValueError):
    exit_code = 2


class LyapunovRefusal(PerpsimError):
    """
    The drift-budget inequality fails at the requested delta.

    :param message: human readable reason
    :param delta: the refused delta
    :param largest_admissible_delta: largest delta for which construction succeeds (None if unknown)
    """

    exit_code = 3

    def __init__(self, message, delta=None, largest_admissible_delta=None):
        super().__init__(message)
        self.delta = delta
        self.largest_admissible_delta = largest_admissible_delta


class NumericError(PerpsimError):
    exit_code = 4


class DomainError(NumericError, ValueError):
    pass


class ReducibleMatrixError(NumericError):
    pass


class CramerConditionError(NumericError):
    pass


class EstimationError(NumericError):
    pass


class ConvergenceError(NumericError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
