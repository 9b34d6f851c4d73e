"""Accent-robust CTC speech recognition on synthetic multi-accent data.

The package trains a small transformer CTC recognizer whose encoder can be
pushed toward (multi-task) or away from (adversarial) accent information,
optionally fused with labeled or extracted accent embeddings. Everything
runs on CPU in seconds; see the README for the command-line workflow.
"""

from .errors import (
    AccentCtcError,
    ConfigError,
    ContractError,
    ExtractionError,
    FeasibilityError,
    NumericError,
    SamplerError,
    ShapeError,
    TrainingDiverged,
    UndefinedWerError,
    UnknownAccentError,
)
from .estimator import AccentRobustCtc

__version__ = "0.1.0"

__all__ = [
    "AccentCtcError",
    "AccentRobustCtc",
    "ConfigError",
    "ContractError",
    "ExtractionError",
    "FeasibilityError",
    "NumericError",
    "SamplerError",
    "ShapeError",
    "TrainingDiverged",
    "UndefinedWerError",
    "UnknownAccentError",
    "__version__",
]
