"""Cahn-Hilliard and Cahn-Hilliard-Oono dynamics in uniformly-local spaces."""
from ._backend import BACKEND
from .errors import (AssumptionError, ConfigError, DomainError, FitError, SafeguardError, ScheduleError, SizeError,
                     StabilityError, StepError, UlchError, ValidationError, WindowError)
from .grid import Field, GridSpec, read_snapshot, write_snapshot
from .potentials import PotentialSpec, cubic, regular, singular, validate
from .solver import Forcing, InitialCondition, SimConfig, SimState, compute_mu, run, step
from .weights import EpsilonSchedule, WeightFn

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "AssumptionError", "ConfigError", "DomainError", "FitError", "SafeguardError", "ScheduleError",
    "SizeError", "StabilityError", "StepError", "UlchError", "ValidationError", "WindowError", "Field", "GridSpec",
    "read_snapshot", "write_snapshot", "PotentialSpec", "cubic", "regular", "singular", "validate", "Forcing",
    "InitialCondition", "SimConfig", "SimState", "compute_mu", "run", "step", "EpsilonSchedule", "WeightFn",
]
