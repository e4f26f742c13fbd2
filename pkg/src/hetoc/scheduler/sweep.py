"""Duty-ratio sweeps: run the full pipeline per grid point and record timings.

Each point recompiles the workload with its ratio vector (ratios are
compile-time attributes) and executes with batching enabled. Points run
strictly sequentially; a failing point is recorded, not fatal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

from ..passes.pipeline import run_pipeline
from ..runtime.devices import HOST_ID, DeviceTable
from ..runtime.executor import execute_batched
from .model import PerfModel, fit_model
from .workload import Workload, build_hash_module, pick_accel

CSV_COLUMNS = ("ratio_cpu", "wall_s", "cpu_s", "accel_s", "batches", "n_data", "alg")


@dataclass
class SweepRecord:
    ratio_cpu: float
    wall_s: float
    cpu_s: float
    accel_s: float
    batches: int
    n_data: int
    alg: str
    error: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.ratio_cpu <= 1.0:
            raise ValueError(f"ratio {self.ratio_cpu} outside [0, 1]")


def ratio_grid(step: float) -> list[float]:
    """{0, step, 2*step, ...} up to and always including 1."""
    if not 0.0 < step <= 1.0:
        raise ValueError("step must be in (0, 1]")
    xs = []
    i = 0
    while i * step < 1.0 - 1e-12:
        xs.append(round(i * step, 12))
        i += 1
    xs.append(1.0)
    return xs


def run_point(
    workload: Workload,
    devices: DeviceTable,
    ratio_cpu: float,
    *,
    no_sha_accel: bool = False,
    message_bytes: bytes | None = None,
) -> SweepRecord:
    accel = pick_accel(devices)
    module = build_hash_module(workload, ratio_cpu, accel)
    lowered = run_pipeline(module, devices=devices, no_sha_accel=no_sha_accel)
    msgs = message_bytes if message_bytes is not None else workload.message_bytes()
    report = execute_batched(lowered, devices, {"msgs": msgs})
    return SweepRecord(
        ratio_cpu=ratio_cpu,
        wall_s=report.max_wall(),
        cpu_s=report.wall_time.get(HOST_ID, 0.0),
        accel_s=report.wall_time.get(accel, 0.0) if accel else 0.0,
        batches=report.batch_count.get(accel, 0) if accel else 0,
        n_data=workload.count,
        alg=workload.alg,
    )


def sweep(
    workload: Workload,
    devices: DeviceTable,
    step: float = 0.02,
    *,
    no_sha_accel: bool = False,
) -> list[SweepRecord]:
    message_bytes = workload.message_bytes()
    records = []
    for x in ratio_grid(step):
        try:
            records.append(
                run_point(
                    workload,
                    devices,
                    x,
                    no_sha_accel=no_sha_accel,
                    message_bytes=message_bytes,
                )
            )
        except Exception as e:  # per-point failures are recorded, not fatal
            records.append(
                SweepRecord(x, float("nan"), float("nan"), float("nan"), 0,
                            workload.count, workload.alg, error=str(e)))
    return records


def sweep_argmin(records: list[SweepRecord]) -> SweepRecord:
    good = [r for r in records if r.error is None]
    if not good:
        raise ValueError("no successful sweep points")
    return min(good, key=lambda r: r.wall_s)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def records_to_csv(records: list[SweepRecord]) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in records:
        if r.error is not None:
            continue
        out.write(
            f"{_fmt(r.ratio_cpu)},{_fmt(r.wall_s)},{_fmt(r.cpu_s)},{_fmt(r.accel_s)},"
            f"{r.batches},{r.n_data},{r.alg}\n"
        )
    return out.getvalue()


def fit_from_measurements(
    workload: Workload,
    devices: DeviceTable,
    sizes: list[int],
    *,
    no_sha_accel: bool = False,
) -> PerfModel:
    """Measure host-only and accel-only runs at several sizes and fit the model."""
    cpu_samples, dev_samples = [], []
    for n in sizes:
        w = Workload(workload.alg, n, workload.width)
        cpu_samples.append((n, run_point(w, devices, 1.0, no_sha_accel=no_sha_accel).cpu_s))
        dev_samples.append((n, run_point(w, devices, 0.0, no_sha_accel=no_sha_accel).accel_s))
    return fit_model(cpu_samples, dev_samples, devices.host.threads)
