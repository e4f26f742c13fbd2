"""Lowering of batch hash ops onto parallel loops with per-message digests.

crypto.hash_batch becomes a hyper.for over message indices whose body is a
single crypto.digest. Kernel selection happens here: the accelerated SHA-1
variant is bound when the host reports the SHA extension and it has not been
disabled; per-device refinement happens again when the loop is split.
"""

from __future__ import annotations

from ..crypto.batch import DIGEST_LEN
from ..hir.core import (
    Block,
    HirModule,
    HirOp,
    Region,
    Scalar,
    Value,
    clone_module,
    max_value_id,
)
from ..runtime.devices import DeviceTable


class LoweringError(ValueError):
    pass


def select_digest_accel(alg: str, devices: DeviceTable | None, no_sha_accel: bool) -> bool:
    if alg != "sha1" or no_sha_accel or devices is None:
        return False
    return devices.host.sha_accel


def lower_crypto(
    module: HirModule,
    devices: DeviceTable | None = None,
    no_sha_accel: bool = False,
) -> HirModule:
    module = clone_module(module)
    for func in module.functions:
        next_id = max_value_id(func) + 1
        new_ops = []
        for op in func.body.ops:
            if op.opcode != "crypto.hash_batch":
                new_ops.append(op)
                continue
            alg = op.attrs["alg"]
            if alg not in DIGEST_LEN:
                raise LoweringError(f"unknown hash algorithm {alg!r}")
            msgs, out = op.operands
            count = op.attrs["count"]
            accel = select_digest_accel(alg, devices, no_sha_accel)
            iv = Value(next_id, Scalar("index"))
            next_id += 1
            digest = HirOp(
                "crypto.digest",
                [msgs, out, iv],
                attrs={"alg": alg, "msg_len": op.attrs["msg_len"], "accel": accel},
            )
            body = Block(args=[iv], ops=[digest, HirOp("yield")])
            new_ops.append(
                HirOp(
                    "hyper.for",
                    [msgs, out],
                    [],
                    {
                        "lb": 0,
                        "ub": count,
                        "devices": op.attrs["devices"],
                        "shared": op.attrs.get("shared", False),
                        "n_ins": 1,
                    },
                    [Region([body])],
                )
            )
        func.body.ops = new_ops
    return module
