"""Duty-ratio scheduling: performance model, fitting, prediction, sweeps."""

from .model import PerfModel, fit_model, predict_opt_ratio, t_cpu, t_gpu, t_opt
from .sweep import (
    CSV_COLUMNS,
    SweepRecord,
    fit_from_measurements,
    ratio_grid,
    records_to_csv,
    run_point,
    sweep,
    sweep_argmin,
)
from .workload import Workload, build_hash_module, pick_accel

__all__ = [
    "CSV_COLUMNS",
    "PerfModel",
    "SweepRecord",
    "Workload",
    "build_hash_module",
    "fit_from_measurements",
    "fit_model",
    "pick_accel",
    "predict_opt_ratio",
    "ratio_grid",
    "records_to_csv",
    "run_point",
    "sweep",
    "sweep_argmin",
    "t_cpu",
    "t_gpu",
    "t_opt",
]
