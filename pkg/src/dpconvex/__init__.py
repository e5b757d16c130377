"""Differentially private convex learning via output perturbation, with audits and an
experiment harness."""

from .core import (
    DataError,
    Dataset,
    Example,
    LossFamily,
    LossSpec,
    MechanismId,
    PrivacyBudget,
    ScalingRecord,
    TrainedModel,
    make_neighbor,
    read_csv,
    scale_dataset,
    write_csv,
)
from .losses import hinge_spec, logistic_spec, make_spec, squared_spec, with_tikhonov
from .mechanisms import MechanismConfig, MechanismError, train, tune_private
from .noise import RngStream, default_seed
from .solver import SolverConfig, SolverError, solve_erm

__all__ = [
    "DataError", "Dataset", "Example", "LossFamily", "LossSpec", "MechanismId", "PrivacyBudget",
    "ScalingRecord", "TrainedModel", "make_neighbor", "read_csv", "scale_dataset", "write_csv",
    "hinge_spec", "logistic_spec", "make_spec", "squared_spec", "with_tikhonov",
    "MechanismConfig", "MechanismError", "train", "tune_private", "RngStream", "default_seed",
    "SolverConfig", "SolverError", "solve_erm",
]
__version__ = "0.1.0"
