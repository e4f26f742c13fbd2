"""Materialization of reductions in per-device loops.

After loop splitting, par.loop/dev.launch ops still carry hyper.reduce bodies
and expose per-device partial results. This pass gives each such loop a
device-local accumulator: the accumulator starts at the combine's identity,
every iteration folds into it with a mutually-exclusive atomic update, and the
partial is read back after the loop (through an explicit device round trip for
accelerators). The cross-device fold emitted during loop splitting then
consumes the loaded partials.
"""

from __future__ import annotations

from ..hir.core import (
    Buffer,
    Function,
    HirModule,
    HirOp,
    INT_KINDS,
    Scalar,
    Value,
    clone_module,
    max_value_id,
    walk_ops,
)
from .lower_crypto import LoweringError
from .lower_hyper_for import reduce_combine_kind, reduce_identity


def lower_reduce(module: HirModule) -> HirModule:
    module = clone_module(module)
    for func in module.functions:
        _ReduceLowering(func).run()
    return module


class _ReduceLowering:
    def __init__(self, func: Function):
        self.func = func
        self.next_id = max_value_id(func) + 1
        self.replacement: dict[int, Value] = {}

    def fresh(self, type) -> Value:
        v = Value(self.next_id, type)
        self.next_id += 1
        return v

    def run(self) -> None:
        new_ops: list[HirOp] = []
        for op in self.func.body.ops:
            if op.opcode in ("par.loop", "dev.launch") and op.results:
                new_ops.extend(self.expand(op))
            else:
                new_ops.append(op)
        self.func.body.ops = new_ops
        if self.replacement:
            for _, _, op in walk_ops(self.func.body):
                op.operands = [self.replacement.get(id(o), o) for o in op.operands]

    def expand(self, loop: HirOp) -> list[HirOp]:
        body = loop.body()
        reduces = [o for o in body.ops if o.opcode == "hyper.reduce"]
        on_device = loop.opcode == "dev.launch"
        group = loop.attrs.get("group")

        pre: list[HirOp] = []
        post: list[HirOp] = []
        zero_idx = self.fresh(Scalar("index"))
        pre.append(HirOp("const", [], [zero_idx], {"value": 0}))

        acc_of: dict[int, Value] = {}  # id(reduce op) -> accumulator buffer in loop scope
        for result, reduce_op in zip(loop.results, reduces):
            elem: Scalar = reduce_op.operands[0].type
            if elem.kind not in INT_KINDS:
                raise LoweringError(
                    f"reductions over {elem.kind} are unsupported; integer kinds only"
                )
            kind = reduce_combine_kind(reduce_op)
            identity = reduce_identity(kind, elem.kind)

            acc_h = self.fresh(Buffer(elem.kind, 1))
            ident_v = self.fresh(elem)
            pre.append(HirOp("memref.alloc", [], [acc_h]))
            pre.append(HirOp("const", [], [ident_v], {"value": identity}))
            pre.append(HirOp("store", [ident_v, acc_h, zero_idx]))

            if on_device:
                device = loop.attrs["device"]
                acc_d = self.fresh(Buffer(elem.kind, 1, device))
                alloc_attrs = {"device": device}
                data_attrs = {}
                if group is not None:
                    alloc_attrs["group"] = group
                    data_attrs["group"] = group
                pre.append(HirOp("hyper.alloc", [], [acc_d], alloc_attrs))
                pre.append(HirOp("hyper.memcpy", [acc_h, acc_d], attrs=dict(data_attrs)))
                post.append(HirOp("hyper.memcpy", [acc_d, acc_h], attrs=dict(data_attrs)))
                post.append(HirOp("hyper.dealloc", [acc_d], attrs=dict(data_attrs)))
                acc_of[id(reduce_op)] = acc_d
            else:
                acc_of[id(reduce_op)] = acc_h

            partial = self.fresh(elem)
            post.append(HirOp("load", [acc_h, zero_idx], [partial]))
            self.replacement[id(result)] = partial
            # The body's atomic update folds with the recognized kind; the
            # combine region itself is consumed here.
            new_body_ops = []
            for op in body.ops:
                if op is reduce_op:
                    updated = self.fresh(elem)
                    new_body_ops.append(
                        HirOp(
                            "atomic_rmw",
                            [reduce_op.operands[0], acc_of[id(reduce_op)], zero_idx],
                            [updated],
                            {"kind": kind},
                        )
                    )
                else:
                    new_body_ops.append(op)
            body.ops = new_body_ops
        loop.results = []
        return pre + [loop] + post
