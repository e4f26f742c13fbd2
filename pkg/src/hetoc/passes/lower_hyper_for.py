"""Splitting of hyper.for loops into per-device loops.

Each binding receives a contiguous sub-range of the iteration space, sized by
its duty ratio (cumulative rounding, final endpoint forced). Host-mapped
bindings become par.loop over the global sub-range and keep addressing the
original buffers. Accelerator bindings become dev.launch over a zero-based
local range plus staging: partitioned buffers are sliced into device views
indexed by the local induction variable, while every other use of the
induction variable is rewritten to the reconstructed global index. Loops that
carry reductions leave per-device partial results behind, joined by an inlined
copy of the combine region; the partials themselves are materialized later by
the reduce lowering.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..crypto.batch import DIGEST_LEN
from ..hir.core import (
    Block,
    Buffer,
    DeviceBinding,
    Function,
    HirModule,
    HirOp,
    RATIO_SUM_TOL,
    Region,
    Scalar,
    Value,
    clone_module,
    int_limits,
    max_value_id,
    walk_ops,
)
from ..runtime.devices import DeviceSpec, DeviceTable
from .lower_crypto import LoweringError
from .partition import partition_range

# (buffer operand position, index operand position) of ops that address a
# buffer element-wise through the induction variable.
_ACCESS_SHAPE = {
    "load": ((0, 1, 1),),
    "store": ((1, 2, 1),),
    "atomic_rmw": ((1, 2, 1),),
    "crypto.digest": ((0, 2, "msg_len"), (1, 2, "digest")),
}


def reduce_combine_kind(reduce_op: HirOp) -> str:
    """Classify a combine region as one of the integer kinds addi/maxs/mins."""
    block = reduce_op.body()
    if len(block.args) != 2 or len(block.ops) != 2:
        raise LoweringError("unrecognized reduce combine region")
    comb, ret = block.ops
    if ret.opcode != "hyper.reduce.return" or not comb.results or ret.operands[0] is not comb.results[0]:
        raise LoweringError("reduce region must return its combine result")
    if set(map(id, comb.operands)) != set(map(id, block.args)):
        raise LoweringError("combine op must consume both region arguments")
    if comb.opcode == "addi":
        return "addi"
    if comb.opcode == "atomic_rmw" and len(comb.operands) == 2:
        kind = comb.attrs.get("kind")
        if kind in ("addi", "maxs", "mins"):
            return kind
    raise LoweringError(f"unsupported reduce combine op '{comb.opcode}'")


def reduce_identity(kind: str, elem_kind: str) -> int:
    lo, hi = int_limits(elem_kind)
    return {"addi": 0, "maxs": lo, "mins": hi}[kind]


@dataclass
class _Access:
    op: HirOp
    buf_pos: int
    idx_pos: int
    stride: int


def lower_hyper_for(module: HirModule, devices: DeviceTable) -> HirModule:
    module = clone_module(module)
    for func in module.functions:
        _Lowering(func, devices).run()
    return module


class _Lowering:
    def __init__(self, func: Function, devices: DeviceTable):
        self.func = func
        self.devices = devices
        self.next_id = max_value_id(func) + 1
        self.next_group = 1 + max(
            (op.attrs["group"] for _, _, op in walk_ops(func.body) if "group" in op.attrs),
            default=-1,
        )
        self.replacement: dict[int, Value] = {}

    def fresh(self, type) -> Value:
        v = Value(self.next_id, type)
        self.next_id += 1
        return v

    def run(self) -> None:
        new_ops: list[HirOp] = []
        for op in self.func.body.ops:
            if op.opcode == "hyper.for":
                new_ops.extend(self.lower_loop(op))
            else:
                new_ops.append(op)
        self.func.body.ops = new_ops
        if self.replacement:
            for _, _, op in walk_ops(self.func.body):
                op.operands = [self.replacement.get(id(o), o) for o in op.operands]

    # -- cloning ----------------------------------------------------------------

    def clone_op(self, op: HirOp, vmap: dict[int, Value]) -> HirOp:
        regions = []
        for region in op.regions:
            blocks = []
            for blk in region.blocks:
                args = []
                for a in blk.args:
                    na = self.fresh(a.type)
                    vmap[id(a)] = na
                    args.append(na)
                blocks.append(Block(args, [self.clone_op(o, vmap) for o in blk.ops]))
            regions.append(Region(blocks))
        results = []
        for r in op.results:
            nr = self.fresh(r.type)
            vmap[id(r)] = nr
            results.append(nr)
        operands = [vmap.get(id(o), o) for o in op.operands]
        attrs = dict(op.attrs)
        if "devices" in attrs:
            attrs["devices"] = [
                DeviceBinding(b.target_id, b.duty_ratio, dict(b.target_config))
                for b in attrs["devices"]
            ]
        return HirOp(op.opcode, operands, results, attrs, regions)

    def clone_body(self, block: Block, vmap: dict[int, Value], new_iv: Value) -> Block:
        vmap = dict(vmap)
        vmap[id(block.args[0])] = new_iv
        return Block(args=[], ops=[self.clone_op(o, vmap) for o in block.ops])

    # -- analysis ----------------------------------------------------------------

    def _collect_accesses(self, loop: HirOp) -> list[_Access]:
        accesses = []
        alg_len = lambda op: DIGEST_LEN[op.attrs["alg"]]
        for _, _, op in walk_ops(loop.body()):
            for shape in _ACCESS_SHAPE.get(op.opcode, ()):
                buf_pos, idx_pos, stride = shape
                if op.opcode == "atomic_rmw" and len(op.operands) != 3:
                    continue
                if buf_pos >= len(op.operands):
                    continue
                if stride == "msg_len":
                    stride = op.attrs["msg_len"]
                elif stride == "digest":
                    stride = alg_len(op)
                accesses.append(_Access(op, buf_pos, idx_pos, stride))
        return accesses

    def _partition_strides(
        self, loop: HirOp, accesses: list[_Access]
    ) -> dict[int, tuple[int, bool] | None]:
        """Per partitioned buffer: (element stride, kernel reads it); None = unused."""
        iv = loop.body().args[0]
        strides: dict[int, tuple[int, bool] | None] = {id(v): None for v in loop.operands}
        for acc in accesses:
            buf = acc.op.operands[acc.buf_pos]
            if id(buf) not in strides:
                continue
            idx = acc.op.operands[acc.idx_pos]
            if idx is not iv:
                raise LoweringError(
                    "partitioned buffer is indexed by a value other than the loop induction "
                    "variable; mark the loop shared=true"
                )
            reads = acc.op.opcode in ("load", "atomic_rmw") or (
                acc.op.opcode == "crypto.digest" and acc.buf_pos == 0
            )
            prev = strides[id(buf)]
            if prev is not None and prev[0] != acc.stride:
                raise LoweringError(
                    f"partitioned buffer accessed with conflicting strides {prev[0]} and {acc.stride}"
                )
            strides[id(buf)] = (acc.stride, reads or (prev is not None and prev[1]))
        # Any other use of a partitioned buffer defeats slicing.
        covered = {(id(a.op), a.buf_pos) for a in accesses}
        for _, _, op in walk_ops(loop.body()):
            for pos, operand in enumerate(op.operands):
                if id(operand) in strides and (id(op), pos) not in covered:
                    raise LoweringError(
                        f"partitioned buffer flows into '{op.opcode}', which cannot be sliced; "
                        "mark the loop shared=true"
                    )
        return strides

    # -- emission ----------------------------------------------------------------

    def lower_loop(self, loop: HirOp) -> list[HirOp]:
        bindings: list[DeviceBinding] = loop.attrs["devices"]
        total = sum(b.duty_ratio for b in bindings)
        if abs(total - 1.0) > RATIO_SUM_TOL:
            raise LoweringError(f"duty ratios sum to {total!r}, expected 1")
        specs = [self.devices.resolve(b.target_id) for b in bindings]
        lb, ub = loop.attrs["lb"], loop.attrs["ub"]
        shared = loop.attrs["shared"]
        ranges = partition_range(lb, ub, [b.duty_ratio for b in bindings])
        reduces = [o for o in loop.body().ops if o.opcode == "hyper.reduce"]
        kinds = [reduce_combine_kind(r) for r in reduces]

        active = [(b, s, rng) for b, s, rng in zip(bindings, specs, ranges) if rng[0] < rng[1]]
        if shared and loop.attrs["n_ins"] < len(loop.operands) and len(active) > 1:
            if any(not self.devices.is_host_mapped(b.target_id) for b, _, _ in active):
                raise LoweringError(
                    "shared=true outputs cannot be merged across multiple devices; "
                    "use shared=false so outputs are partitioned"
                )

        strides = None
        if not shared and any(not self.devices.is_host_mapped(b.target_id) for b, _, _ in active):
            strides = self._partition_strides(loop, self._collect_accesses(loop))

        emitted: list[HirOp] = []
        partials: list[list[Value]] = [[] for _ in reduces]
        for binding, spec, (s, e) in active:
            if self.devices.is_host_mapped(binding.target_id):
                loop_op = self._emit_par_loop(loop, spec, s, e, reduces)
                emitted.append(loop_op)
            else:
                loop_op = self._emit_dev_launch(loop, spec, s, e, reduces, shared, strides, emitted)
            for j, p in enumerate(loop_op.results):
                partials[j].append(p)

        for j, (reduce_op, kind) in enumerate(zip(reduces, kinds)):
            elem: Scalar = reduce_op.operands[0].type
            if partials[j]:
                acc = partials[j][0]
                for p in partials[j][1:]:
                    acc = self._inline_combine(reduce_op, acc, p, emitted)
            else:
                acc = self.fresh(elem)
                emitted.append(
                    HirOp("const", [], [acc], {"value": reduce_identity(kind, elem.kind)})
                )
            self.replacement[id(loop.results[j])] = acc
        return emitted

    def _refine_digest_accel(self, block: Block, spec: DeviceSpec) -> None:
        for _, _, op in walk_ops(block):
            if op.opcode == "crypto.digest":
                op.attrs["accel"] = bool(op.attrs.get("accel")) and spec.sha_accel

    def _loop_results(self, reduces: list[HirOp]) -> list[Value]:
        return [self.fresh(r.operands[0].type) for r in reduces]

    def _emit_par_loop(
        self, loop: HirOp, spec: DeviceSpec, s: int, e: int, reduces: list[HirOp]
    ) -> HirOp:
        iv = self.fresh(Scalar("index"))
        block = self.clone_body(loop.body(), {}, iv)
        block.args = [iv]
        self._refine_digest_accel(block, spec)
        return HirOp(
            "par.loop",
            [],
            self._loop_results(reduces),
            {"device": spec.id, "lb": s, "ub": e},
            [Region([block])],
        )

    def _emit_dev_launch(
        self,
        loop: HirOp,
        spec: DeviceSpec,
        s: int,
        e: int,
        reduces: list[HirOp],
        shared: bool,
        strides: dict[int, int | None] | None,
        emitted: list[HirOp],
    ) -> HirOp:
        n = e - s
        n_ins = loop.attrs["n_ins"]
        ins, outs = loop.operands[:n_ins], loop.operands[n_ins:]
        group = self.next_group
        self.next_group += 1
        vmap: dict[int, Value] = {}
        views: set[int] = set()
        post: list[HirOp] = []

        def stage(buf: Value, copy_in: bool, copy_out: bool) -> None:
            t: Buffer = buf.type
            if shared:
                stride, kernel_reads = None, True
            else:
                info = strides.get(id(buf)) if strides is not None else None
                if info is None:
                    return  # partitioned but never accessed: nothing to stage
                stride, kernel_reads = info
            length = t.length if shared else n * stride
            dev_buf = self.fresh(Buffer(t.elem, length, spec.id))
            alloc_attrs = {"device": spec.id, "group": group}
            copy_attrs: dict = {"group": group}
            back_attrs: dict = {"group": group}
            if not shared:
                alloc_attrs["slice_stride"] = stride
                copy_attrs.update({"src_off": s * stride, "dst_off": 0, "count": length})
                back_attrs.update({"src_off": 0, "dst_off": s * stride, "count": length})
            emitted.append(HirOp("hyper.alloc", [], [dev_buf], alloc_attrs))
            if copy_in or kernel_reads:
                emitted.append(HirOp("hyper.memcpy", [buf, dev_buf], attrs=copy_attrs))
            if copy_out:
                post.append(HirOp("hyper.memcpy", [dev_buf, buf], attrs=back_attrs))
            post.append(HirOp("hyper.dealloc", [dev_buf], attrs={"group": group}))
            vmap[id(buf)] = dev_buf
            views.add(id(dev_buf))

        out_ids = set(map(id, outs))
        for buf in ins:
            if id(buf) not in vmap:
                stage(buf, copy_in=True, copy_out=id(buf) in out_ids)
        for buf in outs:
            if id(buf) not in vmap:
                stage(buf, copy_in=shared, copy_out=True)

        t_local = self.fresh(Scalar("index"))
        g_global = self.fresh(Scalar("index"))
        block = self.clone_body(loop.body(), vmap, g_global)
        if not shared:
            # element-wise accesses into sliced views use the local index
            for _, _, op in walk_ops(block):
                for buf_pos, idx_pos, _ in _ACCESS_SHAPE.get(op.opcode, ()):
                    if (
                        buf_pos < len(op.operands)
                        and idx_pos < len(op.operands)
                        and id(op.operands[buf_pos]) in views
                        and op.operands[idx_pos] is g_global
                    ):
                        op.operands[idx_pos] = t_local
        uses_global = any(
            o is g_global for _, _, op in walk_ops(block) for o in op.operands
        )
        if uses_global:
            offset_c = self.fresh(Scalar("index"))
            block.ops = [
                HirOp("const", [], [offset_c], {"value": s}),
                HirOp("addi", [t_local, offset_c], [g_global]),
            ] + block.ops
        block.args = [t_local]
        self._refine_digest_accel(block, spec)
        launch = HirOp(
            "dev.launch",
            [],
            self._loop_results(reduces),
            {"device": spec.id, "lb": 0, "ub": n, "offset": s, "group": group},
            [Region([block])],
        )
        emitted.append(launch)
        emitted.extend(post)
        return launch

    def _inline_combine(self, reduce_op: HirOp, x: Value, y: Value, emitted: list[HirOp]) -> Value:
        block = reduce_op.body()
        vmap = {id(block.args[0]): x, id(block.args[1]): y}
        for op in block.ops[:-1]:
            emitted.append(self.clone_op(op, vmap))
        ret = block.ops[-1]
        return vmap[id(ret.operands[0])]
