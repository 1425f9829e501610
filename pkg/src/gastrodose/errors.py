"""Exception hierarchy. The CLI maps each family to an exit status."""


class GastrodoseError(Exception):
    pass


class ConfigError(GastrodoseError, ValueError):
    pass


class ParameterError(ConfigError):
    pass


class NumericalError(GastrodoseError, ArithmeticError):
    pass


class ModelDomainError(NumericalError):
    """A Michaelis-Menten or inhibition denominator vanished."""


class IntegrationError(NumericalError):
    """The adaptive step controller could not meet its tolerance."""


class InvariantViolation(NumericalError):
    """A simulated state left its admissible set by more than the allowed slack."""


class InfeasibleError(GastrodoseError):
    """No admissible dose keeps corpal acid under the ceiling."""

    def __init__(self, message, dose_time=None):
        super().__init__(message)
        self.dose_time = dose_time


class IterationLimitError(NumericalError):
    pass
