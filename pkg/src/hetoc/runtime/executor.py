"""Interpreter for fully lowered modules across host and simulated accelerators.

Loops run on a worker pool per device (range split into per-worker chunks);
data ops move bytes between per-device arenas and charge the configured
simulated latencies (per-alloc, per-byte copy, per-launch overhead) to the
owning device's clock. Per-device time is reported as measured compute CPU
time divided by the device's worker count plus its simulated charges, so a
device behaves like independent hardware even when every pool shares the same
physical cores; the barrier-join wall time of a run is the maximum over
devices. Loop bodies matching the canonical digest-loop shape are dispatched
to the vectorized batch kernels; everything else is interpreted per index
with bounds checks.

Batched execution re-runs a launch group (the staging ops and the launch
carry a shared group tag) as ceil(needed_bytes / capacity) sequential
sub-batches, each with its own alloc/copy/launch/copy-back/dealloc cycle;
outputs are byte-identical to an unbatched run.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from struct import pack_into, unpack_from

import numpy as np

from ..crypto.batch import DIGEST_LEN, batch_digest, digest, digest_sha1_accel
from ..hir.core import (
    Block,
    Buffer,
    Function,
    HirModule,
    HirOp,
    Value,
    elem_bytes,
    scalar_bits,
    walk_ops,
)
from .arena import Arena, ArenaError, RuntimeBuffer
from .devices import DeviceSpec, DeviceTable

_FMT = {"i8": "b", "i32": "<i", "i64": "<q", "index": "<q", "f64": "<d"}


class ExecError(RuntimeError):
    pass


def _wrap(kind: str, v: int) -> int:
    if kind == "f64":
        return v
    bits = scalar_bits(kind)
    v &= (1 << bits) - 1
    if v >= 1 << (bits - 1):
        v -= 1 << bits
    return v


_COMBINE = {
    "addi": lambda a, b: a + b,
    "maxs": max,
    "mins": min,
}


@dataclass
class ExecReport:
    wall_time: dict[str, float] = field(default_factory=dict)
    batch_count: dict[str, int] = field(default_factory=dict)
    bytes_copied: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, bytes] = field(default_factory=dict)
    returned: list = field(default_factory=list)
    elapsed_s: float = 0.0
    compute_s: dict[str, float] = field(default_factory=dict)
    charge_s: dict[str, float] = field(default_factory=dict)

    def max_wall(self) -> float:
        return max(self.wall_time.values(), default=0.0)


# ---------------------------------------------------------------------------
# Loop body compilation
# ---------------------------------------------------------------------------

_BODY_OPS = ("const", "addi", "muli", "load", "store", "atomic_rmw", "crypto.digest", "yield")


class _BodyProgram:
    """A loop body compiled to closures over a per-iteration slot array."""

    def __init__(self, block: Block, resolve_outer, loc: str):
        self.loc = loc
        self.slot_of: dict[int, int] = {id(block.args[0]): 0}
        self.nslots = 1
        self.steps: list = []

        def getter(v: Value):
            s = self.slot_of.get(id(v))
            if s is not None:
                return ("slot", s)
            return ("capt", resolve_outer(v))

        def new_slot(v: Value) -> int:
            self.slot_of[id(v)] = self.nslots
            self.nslots += 1
            return self.nslots - 1

        for op in block.ops:
            if op.opcode not in _BODY_OPS:
                raise ExecError(
                    f"{loc}: op '{op.opcode}' is not executable inside a lowered loop body"
                )
            if op.opcode == "yield":
                continue
            self._compile_op(op, getter, new_slot)

    def _compile_op(self, op: HirOp, getter, new_slot) -> None:
        loc = self.loc

        def rd(which):
            kind, payload = which
            if kind == "slot":
                return lambda slots, _i=payload: slots[_i]
            return lambda slots, _v=payload: _v

        if op.opcode == "const":
            dst = new_slot(op.result)
            value = op.attrs["value"]
            if op.result.type.kind != "f64":
                value = _wrap(op.result.type.kind, int(value))
            self.steps.append(lambda slots, _d=dst, _v=value: slots.__setitem__(_d, _v))
            return
        if op.opcode in ("addi", "muli"):
            a = rd(getter(op.operands[0]))
            b = rd(getter(op.operands[1]))
            dst = new_slot(op.result)
            kind = op.result.type.kind
            if op.opcode == "addi":
                fn = lambda x, y: x + y
            else:
                fn = lambda x, y: x * y
            def step(slots, _a=a, _b=b, _d=dst, _k=kind, _f=fn):
                slots[_d] = _wrap(_k, _f(_a(slots), _b(slots)))
            self.steps.append(step)
            return
        if op.opcode == "load":
            buf = rd(getter(op.operands[0]))
            idx = rd(getter(op.operands[1]))
            dst = new_slot(op.result)
            fmt = _FMT[op.operands[0].type.elem]
            size = elem_bytes(op.operands[0].type.elem)
            def step(slots, _b=buf, _i=idx, _d=dst, _f=fmt, _s=size):
                b: RuntimeBuffer = _b(slots)
                i = _i(slots)
                if not 0 <= i < b.length:
                    raise ExecError(f"{loc}: load index {i} out of bounds for length {b.length}")
                slots[_d] = unpack_from(_f, b.storage, i * _s)[0]
            self.steps.append(step)
            return
        if op.opcode == "store":
            val = rd(getter(op.operands[0]))
            buf = rd(getter(op.operands[1]))
            idx = rd(getter(op.operands[2]))
            fmt = _FMT[op.operands[1].type.elem]
            size = elem_bytes(op.operands[1].type.elem)
            def step(slots, _v=val, _b=buf, _i=idx, _f=fmt, _s=size):
                b: RuntimeBuffer = _b(slots)
                i = _i(slots)
                if not 0 <= i < b.length:
                    raise ExecError(f"{loc}: store index {i} out of bounds for length {b.length}")
                pack_into(_f, b.storage, i * _s, _v(slots))
            self.steps.append(step)
            return
        if op.opcode == "atomic_rmw":
            kind = op.attrs["kind"]
            comb = _COMBINE[kind]
            if len(op.operands) == 2:
                a = rd(getter(op.operands[0]))
                b = rd(getter(op.operands[1]))
                dst = new_slot(op.result)
                ek = op.operands[0].type.kind
                def step(slots, _a=a, _b=b, _d=dst, _c=comb, _k=ek):
                    slots[_d] = _wrap(_k, _c(_a(slots), _b(slots)))
                self.steps.append(step)
                return
            val = rd(getter(op.operands[0]))
            buf = rd(getter(op.operands[1]))
            idx = rd(getter(op.operands[2]))
            dst = new_slot(op.result)
            fmt = _FMT[op.operands[1].type.elem]
            size = elem_bytes(op.operands[1].type.elem)
            ek = op.operands[0].type.kind
            def step(slots, _v=val, _b=buf, _i=idx, _d=dst, _c=comb, _f=fmt, _s=size, _k=ek):
                b: RuntimeBuffer = _b(slots)
                i = _i(slots)
                if not 0 <= i < b.length:
                    raise ExecError(f"{loc}: atomic index {i} out of bounds for length {b.length}")
                with b.lock:
                    old = unpack_from(_f, b.storage, i * _s)[0]
                    new = _wrap(_k, _c(old, _v(slots)))
                    pack_into(_f, b.storage, i * _s, new)
                slots[_d] = new
            self.steps.append(step)
            return
        if op.opcode == "crypto.digest":
            msgs = rd(getter(op.operands[0]))
            out = rd(getter(op.operands[1]))
            idx = rd(getter(op.operands[2]))
            alg = op.attrs["alg"]
            msg_len = op.attrs["msg_len"]
            accel = bool(op.attrs.get("accel"))
            dlen = DIGEST_LEN[alg]
            def step(slots, _m=msgs, _o=out, _i=idx, _a=alg, _ml=msg_len, _ac=accel, _dl=dlen):
                m: RuntimeBuffer = _m(slots)
                o: RuntimeBuffer = _o(slots)
                i = _i(slots)
                if i < 0 or (i + 1) * _ml > m.length:
                    raise ExecError(f"{loc}: digest message {i} out of bounds")
                if (i + 1) * _dl > o.length:
                    raise ExecError(f"{loc}: digest output {i} out of bounds")
                msg = bytes(m.storage[i * _ml : (i + 1) * _ml])
                d = digest_sha1_accel(msg) if (_ac and _a == "sha1") else digest(_a, msg)
                o.storage[i * _dl : (i + 1) * _dl] = d.data
            self.steps.append(step)
            return

    def run_range(self, lo: int, hi: int) -> None:
        steps = self.steps
        nslots = self.nslots
        for i in range(lo, hi):
            slots = [None] * nslots
            slots[0] = i
            for step in steps:
                step(slots)


def _match_digest_loop(block: Block):
    """Recognize the canonical digest loop.

    Returns (digest_op, base, from_const): rows hashed are [lb+base, ub+base),
    and from_const says whether base came from a global-offset preamble (only
    such bases move when a batched sub-range shifts the offset).
    """
    ops = block.ops
    iv = block.args[0]
    if len(ops) == 2 and ops[0].opcode == "crypto.digest" and ops[1].opcode == "yield":
        if ops[0].operands[2] is iv:
            return ops[0], 0, False
    if len(ops) == 4 and [o.opcode for o in ops] == ["const", "addi", "crypto.digest", "yield"]:
        c, add, dig, _ = ops
        if dig.operands[2] is add.results[0] and (
            (add.operands[0] is iv and add.operands[1] is c.results[0])
            or (add.operands[1] is iv and add.operands[0] is c.results[0])
        ):
            return dig, int(c.attrs["value"]), True
    return None


# ---------------------------------------------------------------------------
# Executor
# ---------------------------------------------------------------------------


@dataclass
class _Group:
    gid: int
    ops: list[HirOp] = field(default_factory=list)

    @property
    def launches(self) -> list[HirOp]:
        return [o for o in self.ops if o.opcode == "dev.launch"]


class _Executor:
    def __init__(
        self,
        module: HirModule,
        devices: DeviceTable,
        inputs: dict | None,
        batched: bool,
    ):
        self.module = module
        self.devices = devices
        self.inputs = dict(inputs or {})
        self.batched = batched
        self.arenas = {d.id: Arena(d) for d in devices.all_devices()}
        self.pools: dict[str, ThreadPoolExecutor] = {}
        self.env: dict[int, object] = {}
        self.charge: dict[str, float] = {d.id: 0.0 for d in devices.all_devices()}
        self.cpu: dict[str, float] = {d.id: 0.0 for d in devices.all_devices()}
        self.batches: dict[str, int] = {d.id: 0 for d in devices.all_devices()}
        self.copied: dict[str, int] = {d.id: 0 for d in devices.all_devices()}
        self.returned: list = []

    # -- helpers -----------------------------------------------------------------

    def _pool(self, device_id: str) -> ThreadPoolExecutor:
        if device_id not in self.pools:
            spec = self.devices.resolve(device_id)
            self.pools[device_id] = ThreadPoolExecutor(
                max_workers=spec.threads, thread_name_prefix=f"hetoc-{device_id}"
            )
        return self.pools[device_id]

    def close(self) -> None:
        for pool in self.pools.values():
            pool.shutdown(wait=True)

    def value(self, v: Value):
        try:
            return self.env[id(v)]
        except KeyError:
            raise ExecError(f"value %{v.id} has no runtime binding") from None

    def _arena_for(self, space: str) -> Arena:
        arena = self.arenas.get(space)
        if arena is None:
            raise ExecError(f"no arena for device '{space}'")
        return arena

    def _alloc(self, space: str, elem: str, length: int) -> RuntimeBuffer:
        arena = self._arena_for(space)
        try:
            buf = arena.alloc(elem, length, elem_bytes(elem))
        except ArenaError as e:
            raise ExecError(str(e)) from None
        self.charge[space] += arena.spec.per_alloc_us * 1e-6
        return buf

    # -- entry -------------------------------------------------------------------

    def run(self) -> ExecReport:
        start = time.perf_counter()
        self._check_lowered()
        func = self.module.main()
        self._bind_params(func)
        try:
            self._run_ops(func.body.ops)
        finally:
            self.close()
        report = ExecReport(returned=self.returned, elapsed_s=time.perf_counter() - start)
        for d in self.devices.all_devices():
            spec = self.devices.resolve(d.id)
            compute = self.cpu[d.id] / spec.threads
            report.compute_s[d.id] = compute
            report.charge_s[d.id] = self.charge[d.id]
            report.wall_time[d.id] = compute + self.charge[d.id]
            report.batch_count[d.id] = self.batches[d.id]
            report.bytes_copied[d.id] = self.copied[d.id]
        names = func.param_names if getattr(func, "param_names", None) else None
        for i, p in enumerate(func.params):
            if isinstance(p.type, Buffer):
                name = names[i] if names else f"arg{i}"
                report.outputs[name] = bytes(self.value(p).storage)
        for arena in self.arenas.values():
            arena.reclaim_all()
        return report

    def _check_lowered(self) -> None:
        for f in self.module.functions:
            for _, _, op in walk_ops(f.body):
                if op.opcode in ("hyper.for", "hyper.reduce", "crypto.hash_batch"):
                    raise ExecError(
                        f"module is not fully lowered: found '{op.opcode}' "
                        "(run the lowering pipeline first)"
                    )

    def _bind_params(self, func: Function) -> None:
        names = getattr(func, "param_names", None)
        known = set()
        for i, p in enumerate(func.params):
            name = names[i] if names else f"arg{i}"
            known.add(name)
            if not isinstance(p.type, Buffer):
                raise ExecError("main() parameters must be buffers")
            buf = self._alloc(p.type.space, p.type.elem, p.type.length)
            data = self.inputs.get(name)
            if data is not None:
                raw = bytes(data) if not isinstance(data, (bytes, bytearray)) else bytes(data)
                if len(raw) != len(buf.storage):
                    raise ExecError(
                        f"input '{name}' holds {len(raw)} bytes, expected {len(buf.storage)}"
                    )
                buf.storage[:] = raw
            self.env[id(p)] = buf
        unknown = set(self.inputs) - known
        if unknown:
            raise ExecError(f"inputs name unknown parameters: {sorted(unknown)}")

    # -- top-level interpretation ---------------------------------------------------

    def _run_ops(self, ops: list[HirOp]) -> None:
        consumed: set[int] = set()
        groups = self._collect_groups(ops) if self.batched else {}
        for pos, op in enumerate(ops):
            if id(op) in consumed:
                continue
            gid = op.attrs.get("group")
            if self.batched and gid is not None and gid in groups:
                group = groups.pop(gid)
                self._run_group(group, consumed, pos)
                continue
            if self._run_op(op, pos) == "return":
                return

    def _collect_groups(self, ops: list[HirOp]) -> dict[int, _Group]:
        groups: dict[int, _Group] = {}
        for op in ops:
            gid = op.attrs.get("group")
            if gid is not None:
                groups.setdefault(gid, _Group(gid)).ops.append(op)
        return groups

    def _run_op(self, op: HirOp, pos: int) -> str | None:
        loc = f"main#{pos}"
        opcode = op.opcode
        if opcode == "const":
            v = op.attrs["value"]
            kind = op.result.type.kind
            self.env[id(op.result)] = v if kind == "f64" else _wrap(kind, int(v))
        elif opcode in ("addi", "muli"):
            a, b = (self.value(o) for o in op.operands)
            kind = op.result.type.kind
            self.env[id(op.result)] = _wrap(kind, a + b if opcode == "addi" else a * b)
        elif opcode == "load":
            buf: RuntimeBuffer = self.value(op.operands[0])
            i = self.value(op.operands[1])
            if not 0 <= i < buf.length:
                raise ExecError(f"{loc}: load index {i} out of bounds for length {buf.length}")
            size = elem_bytes(buf.elem)
            self.env[id(op.result)] = unpack_from(_FMT[buf.elem], buf.storage, i * size)[0]
        elif opcode == "store":
            val = self.value(op.operands[0])
            buf = self.value(op.operands[1])
            i = self.value(op.operands[2])
            if not 0 <= i < buf.length:
                raise ExecError(f"{loc}: store index {i} out of bounds for length {buf.length}")
            pack_into(_FMT[buf.elem], buf.storage, i * elem_bytes(buf.elem), val)
        elif opcode == "atomic_rmw":
            self._exec_atomic(op, loc)
        elif opcode == "memref.alloc":
            t: Buffer = op.result.type
            self.env[id(op.result)] = self._alloc(t.space, t.elem, t.length)
        elif opcode == "hyper.alloc":
            t = op.result.type
            self.env[id(op.result)] = self._alloc(op.attrs["device"], t.elem, t.length)
        elif opcode in ("memref.dealloc", "hyper.dealloc"):
            buf = self.value(op.operands[0])
            try:
                self.arenas[buf.device].dealloc(buf)
            except ArenaError as e:
                raise ExecError(f"{loc}: {e}") from None
        elif opcode in ("memref.copy", "hyper.memcpy"):
            self._exec_copy(op, loc)
        elif opcode == "crypto.digest":
            prog = _BodyProgram(Block(args=[Value(-1, op.operands[2].type)], ops=[op, HirOp("yield")]), self.value, loc)
            i = self.value(op.operands[2])
            prog.run_range(i, i + 1)
        elif opcode in ("par.loop", "dev.launch"):
            self._run_loop(op, loc)
        elif opcode == "return":
            self.returned = [self.value(o) for o in op.operands]
            return "return"
        elif opcode == "yield":
            pass
        else:
            raise ExecError(f"{loc}: opcode '{opcode}' is not executable at top level")
        return None

    def _exec_atomic(self, op: HirOp, loc: str) -> None:
        comb = _COMBINE[op.attrs["kind"]]
        kind = op.operands[0].type.kind
        if len(op.operands) == 2:
            a, b = (self.value(o) for o in op.operands)
            self.env[id(op.result)] = _wrap(kind, comb(a, b))
            return
        val = self.value(op.operands[0])
        buf: RuntimeBuffer = self.value(op.operands[1])
        i = self.value(op.operands[2])
        if not 0 <= i < buf.length:
            raise ExecError(f"{loc}: atomic index {i} out of bounds for length {buf.length}")
        size = elem_bytes(buf.elem)
        with buf.lock:
            old = unpack_from(_FMT[buf.elem], buf.storage, i * size)[0]
            new = _wrap(kind, comb(old, val))
            pack_into(_FMT[buf.elem], buf.storage, i * size, new)
        self.env[id(op.result)] = new

    def _exec_copy(
        self,
        op: HirOp,
        loc: str,
        src_off_override: int | None = None,
        dst_off_override: int | None = None,
        count_override: int | None = None,
    ) -> None:
        src: RuntimeBuffer = self.value(op.operands[0])
        dst: RuntimeBuffer = self.value(op.operands[1])
        src_off = src_off_override if src_off_override is not None else op.attrs.get("src_off", 0)
        dst_off = dst_off_override if dst_off_override is not None else op.attrs.get("dst_off", 0)
        count = count_override if count_override is not None else op.attrs.get("count")
        if count is None:
            count = min(src.length - src_off, dst.length - dst_off)
        if src_off < 0 or dst_off < 0 or count < 0:
            raise ExecError(f"{loc}: negative copy range")
        if src_off + count > src.length or dst_off + count > dst.length:
            raise ExecError(f"{loc}: copy range exceeds buffer bounds")
        size = elem_bytes(src.elem)
        nbytes = count * size
        dst.storage[dst_off * size : (dst_off + count) * size] = src.storage[
            src_off * size : (src_off + count) * size
        ]
        # transfer cost lands on the non-host endpoint (the device link)
        device = dst.device if dst.device != "host" else src.device
        spec = self.devices.get(device)
        if spec is not None:
            self.charge[device] += spec.per_byte_copy_ns * 1e-9 * nbytes
        if device != "host":
            self.copied[device] += nbytes

    # -- loops -------------------------------------------------------------------

    def _run_loop(self, op: HirOp, loc: str, lb=None, ub=None, offset_shift: int = 0) -> None:
        if op.results:
            raise ExecError(f"{loc}: loop results must be lowered away (run lower-reduce)")
        spec = self.devices.resolve(op.attrs["device"])
        lb = op.attrs["lb"] if lb is None else lb
        ub = op.attrs["ub"] if ub is None else ub
        if op.opcode == "dev.launch":
            self.charge[spec.id] += spec.per_call_overhead_us * 1e-6
        if ub <= lb:
            return
        self.batches[spec.id] += 1
        block = op.body()
        matched = self._fast_digest(block, lb, ub, offset_shift, spec)
        if matched is not None:
            self.cpu[spec.id] += matched
            return
        if offset_shift:
            block = _shift_offset_block(block, offset_shift)
        resolve = self.value
        program = _BodyProgram(block, resolve, loc)
        n = ub - lb
        workers = min(spec.threads, n)
        bounds = np.linspace(lb, ub, workers + 1, dtype=np.int64)

        def task(klo: int, khi: int) -> float:
            t0 = time.thread_time()
            program.run_range(klo, khi)
            return time.thread_time() - t0

        if workers == 1:
            self.cpu[spec.id] += task(lb, ub)
            return
        pool = self._pool(spec.id)
        futs = [pool.submit(task, int(bounds[k]), int(bounds[k + 1])) for k in range(workers)]
        self.cpu[spec.id] += sum(f.result() for f in futs)

    def _fast_digest(
        self, block: Block, lb: int, ub: int, offset_shift: int, spec: DeviceSpec
    ) -> float | None:
        m = _match_digest_loop(block)
        if m is None:
            return None
        dig, base, from_const = m
        if from_const:
            base += offset_shift
        msgs: RuntimeBuffer = self.value(dig.operands[0])
        out: RuntimeBuffer = self.value(dig.operands[1])
        alg = dig.attrs["alg"]
        msg_len = dig.attrs["msg_len"]
        accel = bool(dig.attrs.get("accel"))
        dlen = DIGEST_LEN[alg]
        lo, hi = lb + base, ub + base
        if msgs.elem != "i8" or out.elem != "i8":
            return None
        if msgs.length % msg_len or out.length % dlen:
            return None
        if lo < 0 or hi * msg_len > msgs.length or hi * dlen > out.length:
            raise ExecError(f"digest rows [{lo}, {hi}) out of bounds")
        rows = np.frombuffer(msgs.storage, np.uint8).reshape(-1, msg_len)
        orows = np.frombuffer(out.storage, np.uint8).reshape(-1, dlen)
        n = hi - lo
        workers = min(spec.threads, max(1, n // 4096) or 1)

        def task(klo: int, khi: int) -> float:
            t0 = time.thread_time()
            orows[klo:khi] = batch_digest(alg, rows[klo:khi], accel=accel)
            return time.thread_time() - t0

        if workers == 1:
            return task(lo, hi)
        bounds = np.linspace(lo, hi, workers + 1, dtype=np.int64)
        pool = self._pool(spec.id)
        futs = [pool.submit(task, int(bounds[k]), int(bounds[k + 1])) for k in range(workers)]
        return sum(f.result() for f in futs)

    # -- batched groups ------------------------------------------------------------

    def _run_group(self, group: _Group, consumed: set[int], pos: int) -> None:
        loc = f"main#{pos}(group {group.gid})"
        launches = group.launches
        if len(launches) != 1:
            # not the shape the lowering emits; run the ops as a plain stream
            for op in group.ops:
                consumed.add(id(op))
                self._run_op(op, pos)
            return
        launch = launches[0]
        spec = self.devices.resolve(launch.attrs["device"])
        allocs = [o for o in group.ops if o.opcode == "hyper.alloc"]
        needed = sum(
            o.result.type.length * elem_bytes(o.result.type.elem) for o in allocs
        )
        for op in group.ops:
            consumed.add(id(op))
        cap = spec.mem_bytes
        if needed <= cap:
            for op in group.ops:
                self._run_op(op, pos)
            return

        n = launch.attrs["ub"] - launch.attrs["lb"]
        sliced = sum(
            o.result.type.length * elem_bytes(o.result.type.elem)
            for o in allocs
            if o.attrs.get("slice_stride") is not None
        )
        whole = needed - sliced
        if whole >= cap or n == 0:
            raise ExecError(
                f"{loc}: group needs {needed} bytes of which {whole} are unsplittable, "
                f"over capacity {cap}"
            )
        k = math.ceil(needed / cap)
        k = max(k, math.ceil(sliced / (cap - whole)))
        k = min(k, n)
        chunks = _chunk_ranges(n, k)
        while True:
            per_elem = sliced / n
            biggest = max(hi - lo for lo, hi in chunks)
            if whole + math.ceil(biggest * per_elem) <= cap or k >= n:
                break
            k += 1
            chunks = _chunk_ranges(n, k)
        if whole + math.ceil(max(hi - lo for lo, hi in chunks) * per_elem) > cap:
            raise ExecError(f"{loc}: a single element exceeds device capacity {cap}")

        copies_in = [
            o
            for o in group.ops
            if o.opcode == "hyper.memcpy" and any(o.operands[1] is a.result for a in allocs)
        ]
        copies_out = [
            o
            for o in group.ops
            if o.opcode == "hyper.memcpy" and any(o.operands[0] is a.result for a in allocs)
        ]
        stride_of = {id(a.result): a.attrs.get("slice_stride") for a in allocs}

        for c0, c1 in chunks:
            cn = c1 - c0
            for a in allocs:
                t: Buffer = a.result.type
                stride = stride_of[id(a.result)]
                length = t.length if stride is None else cn * stride
                self.env[id(a.result)] = self._alloc(a.attrs["device"], t.elem, length)
            for cp in copies_in:
                stride = stride_of[id(cp.operands[1])]
                if stride is None:
                    self._exec_copy(cp, loc)
                else:
                    self._exec_copy(
                        cp,
                        loc,
                        src_off_override=cp.attrs.get("src_off", 0) + c0 * stride,
                        dst_off_override=0,
                        count_override=cn * stride,
                    )
            # local range resets to [0, cn); global-index reconstruction shifts by c0
            self._run_loop(launch, loc, lb=0, ub=cn, offset_shift=c0)
            for cp in copies_out:
                stride = stride_of[id(cp.operands[0])]
                if stride is None:
                    self._exec_copy(cp, loc)
                else:
                    self._exec_copy(
                        cp,
                        loc,
                        src_off_override=0,
                        dst_off_override=cp.attrs.get("dst_off", 0) + c0 * stride,
                        count_override=cn * stride,
                    )
            for a in allocs:
                buf = self.value(a.result)
                self.arenas[buf.device].dealloc(buf)


def _chunk_ranges(n: int, k: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n, k + 1, dtype=np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(k)]


def _shift_offset_block(block: Block, shift: int) -> Block:
    """Shift the canonical global-offset preamble (const s; g = addi t, c) by a sub-range start."""
    ops = block.ops
    if (
        len(ops) >= 2
        and ops[0].opcode == "const"
        and ops[1].opcode == "addi"
        and isinstance(ops[0].attrs.get("value"), int)
        and any(o is block.args[0] for o in ops[1].operands)
        and any(o is ops[0].results[0] for o in ops[1].operands)
    ):
        first = HirOp("const", [], ops[0].results, {"value": ops[0].attrs["value"] + shift})
        return Block(args=block.args, ops=[first] + ops[1:])
    return block


def execute(
    module: HirModule,
    devices: DeviceTable,
    inputs: dict | None = None,
    *,
    batched: bool = False,
) -> ExecReport:
    """Interpret a fully lowered module; raises ExecError on any fault."""
    return _Executor(module, devices, inputs, batched).run()


def execute_batched(
    module: HirModule, devices: DeviceTable, inputs: dict | None = None
) -> ExecReport:
    """Like execute, but launch groups too large for their device run in sub-batches."""
    return execute(module, devices, inputs, batched=True)
