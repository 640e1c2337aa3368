"""Dynamically maintainable, LSH-backed kernel density estimation."""

from .collision import CollisionModel
from .errors import (
    CapacityError,
    ConfigurationError,
    ConsistencyError,
    ParameterError,
)
from .estimator import DynamicKernelDensity, EstimatorReport, lower_median
from .harness import TrialStats, check_lipschitz, exact_kde
from .kernels import KernelSpec, make_kernel, weight_level_of, weight_levels_of
from .levels import LevelSchedule, build_level_schedule, kernel_cost
from .lsh import LshTable
from .robust import RobustKernelDensity, ensemble_size
from .snapshot import load_snapshot, save_snapshot

__version__ = "0.1.0"

__all__ = [
    "CollisionModel",
    "CapacityError",
    "ConfigurationError",
    "ConsistencyError",
    "ParameterError",
    "DynamicKernelDensity",
    "EstimatorReport",
    "lower_median",
    "TrialStats",
    "check_lipschitz",
    "exact_kde",
    "KernelSpec",
    "make_kernel",
    "weight_level_of",
    "weight_levels_of",
    "LevelSchedule",
    "build_level_schedule",
    "kernel_cost",
    "LshTable",
    "RobustKernelDensity",
    "ensemble_size",
    "load_snapshot",
    "save_snapshot",
    "__version__",
]
