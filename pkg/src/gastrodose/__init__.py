"""Gastric acid secretion simulator and receding-horizon PPI dose scheduler."""
from .errors import (
    ConfigError, GastrodoseError, InfeasibleError, IntegrationError, InvariantViolation,
    IterationLimitError, ModelDomainError, NumericalError, ParameterError,
)
from .integrator import IntegratorConfig, SimulationTrace, max_corpal_acid, run_in, simulate
from .model import (
    FoodProfile, GastricState, ModelParams, cold_start, default_params, derivative,
    food_intake, load_params,
)
from .pharmacokinetics import DoseEvent, DoseSchedule, ppi_concentration, total_intake

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GastrodoseError", "InfeasibleError", "IntegrationError", "InvariantViolation",
    "IterationLimitError", "ModelDomainError", "NumericalError", "ParameterError",
    "IntegratorConfig", "SimulationTrace", "max_corpal_acid", "run_in", "simulate",
    "FoodProfile", "GastricState", "ModelParams", "cold_start", "default_params", "derivative",
    "food_intake", "load_params",
    "DoseEvent", "DoseSchedule", "ppi_concentration", "total_intake",
]
