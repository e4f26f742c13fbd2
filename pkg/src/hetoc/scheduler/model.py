"""Analytical two-device performance model and its calibration.

Host time grows linearly with its share of the workload and shrinks with core
count; accelerator time is linear in the remaining share (per-message compute,
allocation, and transfer costs) plus a fixed launch overhead. The run time of
a split is the slower of the two, and the best split sits where the two lines
cross.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerfModel:
    p_cpu: float  # seconds per message on one host core
    n_core: int
    p_gpu_over_nthread: float  # aggregate accel seconds per message
    t_alloc: float  # accel allocation seconds per message
    t_memcpy: float  # transfer seconds per message
    o_gpu: float  # fixed per-run accel overhead, seconds

    def __post_init__(self):
        if self.n_core < 1:
            raise ValueError("n_core must be >= 1")
        for name in ("p_cpu", "p_gpu_over_nthread", "t_alloc", "t_memcpy", "o_gpu"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def accel_per_message(self) -> float:
        return self.p_gpu_over_nthread + self.t_alloc + self.t_memcpy


def t_cpu(model: PerfModel, n_data: int, x: float) -> float:
    """Host seconds for share x of n_data messages."""
    return n_data * model.p_cpu * x / model.n_core


def t_gpu(model: PerfModel, n_data: int, x: float) -> float:
    """Accelerator seconds for the remaining share 1-x, plus fixed overhead."""
    return model.accel_per_message * n_data * (1.0 - x) + model.o_gpu


def t_opt(model: PerfModel, n_data: int, x: float) -> float:
    """Run time of the split: the slower of the two devices."""
    return max(t_cpu(model, n_data, x), t_gpu(model, n_data, x))


def predict_opt_ratio(model: PerfModel, n_data: int) -> float:
    """Host share where the two time lines cross, clamped into [0, 1].

    With A = full-load host seconds and B = full-load accel seconds,
    x* = (B + o_gpu) / (A + B).
    """
    a = n_data * model.p_cpu / model.n_core
    b = n_data * model.accel_per_message
    if a + b == 0:
        raise ValueError("model has no workload-dependent terms; optimum undefined")
    return min(1.0, max(0.0, (b + model.o_gpu) / (a + b)))


def _check_samples(samples: list[tuple[int, float]], what: str) -> None:
    if len(samples) < 2:
        raise ValueError(f"need at least 2 {what} samples")
    if len({n for n, _ in samples}) < 2:
        raise ValueError(f"{what} samples must cover at least 2 distinct sizes")


def fit_model(
    cpu_samples: list[tuple[int, float]],
    dev_samples: list[tuple[int, float]],
    n_core: int,
) -> PerfModel:
    """Calibrate from measured (n_data, seconds) pairs.

    Host samples are full-load host-only runs, fitted without intercept (no
    fixed host cost in the model); device samples are device-only runs within
    one batch regime, fitted with slope and intercept. The fitted device slope
    lands in p_gpu_over_nthread as an aggregate; negative fits clamp to zero.
    """
    _check_samples(cpu_samples, "cpu")
    _check_samples(dev_samples, "device")
    sxx = sum(n * n for n, _ in cpu_samples)
    sxy = sum(n * t for n, t in cpu_samples)
    cpu_slope = sxy / sxx
    p_cpu = cpu_slope * n_core

    n_mean = sum(n for n, _ in dev_samples) / len(dev_samples)
    t_mean = sum(t for _, t in dev_samples) / len(dev_samples)
    var = sum((n - n_mean) ** 2 for n, _ in dev_samples)
    cov = sum((n - n_mean) * (t - t_mean) for n, t in dev_samples)
    dev_slope = cov / var
    o_gpu = t_mean - dev_slope * n_mean

    clamped = []
    if p_cpu < 0:
        clamped.append("p_cpu")
        p_cpu = 0.0
    if dev_slope < 0:
        clamped.append("device slope")
        dev_slope = 0.0
    if o_gpu < 0:
        clamped.append("o_gpu")
        o_gpu = 0.0
    if clamped:
        log.warning("fit produced negative %s; clamped to 0", ", ".join(clamped))
    return PerfModel(
        p_cpu=p_cpu,
        n_core=n_core,
        p_gpu_over_nthread=dev_slope,
        t_alloc=0.0,
        t_memcpy=0.0,
        o_gpu=o_gpu,
    )
