"""Quantum noise-induced reservoir computing on a dense density-matrix simulator."""

__version__ = "0.1.0"

from .benchmarks import TaskBundle, make_task
from .metrics import MemoryProfile, MetricReport, memory_profile
from .optimizer import AnnealSettings, EvoSettings, OptimizationResult, dual_annealing, evolutionary_optimize
from .pipeline import ReservoirCost, evaluate, naive_report
from .readout import ReadoutModel, fit, predict
from .reservoir import FeatureMatrix, ReservoirConfig, Scheme, param_count, run_reservoir

__all__ = [
    "AnnealSettings",
    "EvoSettings",
    "FeatureMatrix",
    "MemoryProfile",
    "MetricReport",
    "OptimizationResult",
    "ReadoutModel",
    "ReservoirConfig",
    "ReservoirCost",
    "Scheme",
    "TaskBundle",
    "dual_annealing",
    "evaluate",
    "evolutionary_optimize",
    "fit",
    "make_task",
    "memory_profile",
    "naive_report",
    "param_count",
    "predict",
    "run_reservoir",
]
