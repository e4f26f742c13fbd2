"""Benchmark workload: a fixed-width hash batch split between host and one accelerator."""

from __future__ import annotations

from dataclasses import dataclass

from ..crypto.batch import DIGEST_LEN, gen_messages
from ..hir.core import Buffer, DeviceBinding, FuncBuilder, HirModule
from ..runtime.devices import DeviceTable


@dataclass(frozen=True)
class Workload:
    alg: str
    count: int
    width: int = 9

    def __post_init__(self):
        if self.alg not in DIGEST_LEN:
            raise ValueError(f"unknown algorithm {self.alg!r}")
        if self.count < 0 or self.width <= 0:
            raise ValueError("count must be >= 0 and width > 0")

    def message_bytes(self) -> bytes:
        return gen_messages(0, self.count, self.width).data


def pick_accel(devices: DeviceTable) -> str | None:
    """First configured non-host-mapped accelerator, if any."""
    for a in devices.accels:
        if not a.host_mapped:
            return a.id
    return None


def build_hash_module(
    workload: Workload, ratio_cpu: float, accel_id: str | None
) -> HirModule:
    """crypto.hash_batch over the workload, host share ratio_cpu, rest on the accel."""
    out_len = workload.count * DIGEST_LEN[workload.alg]
    b = FuncBuilder(
        "main", [Buffer("i8", workload.count * workload.width), Buffer("i8", out_len)]
    )
    b.func.param_names = ["msgs", "out"]
    msgs, out = b.func.params
    if accel_id is None or ratio_cpu >= 1.0:
        bindings = [DeviceBinding("host", 1.0)]
    elif ratio_cpu <= 0.0:
        bindings = [DeviceBinding(accel_id, 1.0)]
    else:
        bindings = [
            DeviceBinding("host", ratio_cpu),
            DeviceBinding(accel_id, 1.0 - ratio_cpu),
        ]
    b.op(
        "crypto.hash_batch",
        [msgs, out],
        attrs={
            "alg": workload.alg,
            "count": workload.count,
            "msg_len": workload.width,
            "shared": False,
            "devices": bindings,
        },
    )
    return HirModule([b.build()])
