"""Push-pull quantum optimal control: GRAPE and Krotov with orthogonal-set pushes."""
from . import grape, krotov, linalg, model, orthogonal, systems
from .errors import (ConfigError, ContractError, EmptySetError, GenerationError,
                     NumericalConsistencyError, PulseFormatError)
from .model import (ControlProblem, GateTask, StateTask, ensemble_performance, performance,
                    propagate)
from .orthogonal import OrthogonalSet

__version__ = "0.1.0"

__all__ = [
    "grape",
    "krotov",
    "linalg",
    "model",
    "orthogonal",
    "systems",
    "ConfigError",
    "ContractError",
    "EmptySetError",
    "GenerationError",
    "NumericalConsistencyError",
    "PulseFormatError",
    "ControlProblem",
    "GateTask",
    "StateTask",
    "OrthogonalSet",
    "ensemble_performance",
    "performance",
    "propagate",
]
