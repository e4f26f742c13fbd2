"""Structural and type verification for IR modules.

verify() never raises on malformed IR; every violation becomes a Diagnostic.
An empty result is the precondition for printing, passes, and execution.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..crypto.batch import DIGEST_LEN
from .core import (
    ATOMIC_KINDS,
    HOST,
    INT_KINDS,
    LOOP_OPCODES,
    OP_SIGNATURES,
    RATIO_SUM_TOL,
    SCALAR_KINDS,
    TERMINATORS,
    Block,
    Buffer,
    Function,
    HirModule,
    HirOp,
    Scalar,
    Value,
)


@dataclass
class Diagnostic:
    severity: str
    location: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.location}: {self.message}"


class _Checker:
    def __init__(self, module: HirModule):
        self.module = module
        self.diags: list[Diagnostic] = []
        self.known_devices = module.device_ids() | {HOST}

    def error(self, loc: str, msg: str) -> None:
        self.diags.append(Diagnostic("error", loc, msg))

    def run(self) -> list[Diagnostic]:
        seen = set()
        for f in self.module.functions:
            if f.name in seen:
                self.error(f.name, f"duplicate function name @{f.name}")
            seen.add(f.name)
            self._check_function(f)
        return self.diags

    # -- function / block structure -----------------------------------------

    def _check_function(self, func: Function) -> None:
        defined: set[int] = set()
        scope: set[int] = set()
        for p in func.params:
            self._check_type(p.type, func.name)
            defined.add(id(p))
            scope.add(id(p))
        self._check_block(func.body, scope, defined, func.name, region_kind="func")

    def _check_block(
        self, block: Block, scope: set[int], defined: set[int], loc: str, region_kind: str
    ) -> None:
        want_term = {"func": "return", "loop": "yield", "reduce": "hyper.reduce.return"}[
            region_kind
        ]
        if not block.ops or block.ops[-1].opcode != want_term:
            self.error(loc, f"block must end in '{want_term}'")
        for i, op in enumerate(block.ops):
            op_loc = f"{loc}#{i}" if op.loc is None else f"{loc}:{op.loc}"
            sig = OP_SIGNATURES.get(op.opcode)
            if sig is None:
                self.error(op_loc, f"unknown opcode '{op.opcode}'")
                continue
            lo, hi, n_res, n_regions = sig
            if len(op.operands) < lo or (hi is not None and len(op.operands) > hi):
                self.error(op_loc, f"'{op.opcode}' has {len(op.operands)} operands")
                continue
            if n_res is not None and len(op.results) != n_res:
                self.error(op_loc, f"'{op.opcode}' must have {n_res} result(s)")
            if len(op.regions) != n_regions:
                self.error(op_loc, f"'{op.opcode}' must have {n_regions} region(s)")
                continue
            if op.opcode in TERMINATORS and i != len(block.ops) - 1:
                self.error(op_loc, f"terminator '{op.opcode}' must end its block")
            for operand in op.operands:
                if id(operand) not in scope:
                    self.error(op_loc, f"operand %{operand.id} used before definition")
            for r in op.results:
                self._check_type(r.type, op_loc)
                if id(r) in defined:
                    self.error(op_loc, f"value %{r.id} defined more than once")
                defined.add(id(r))
            self._check_op(op, op_loc, region_kind)
            for region in op.regions:
                kind = "reduce" if op.opcode == "hyper.reduce" else "loop"
                for blk in region.blocks:
                    inner = set(scope)
                    for a in blk.args:
                        self._check_type(a.type, op_loc)
                        defined.add(id(a))
                        inner.add(id(a))
                    self._check_block(blk, inner, defined, op_loc, kind)
            for r in op.results:
                scope.add(id(r))

    def _check_type(self, t, loc: str) -> None:
        if isinstance(t, Scalar):
            if t.kind not in SCALAR_KINDS:
                self.error(loc, f"unknown scalar kind '{t.kind}'")
        elif isinstance(t, Buffer):
            if t.elem not in SCALAR_KINDS:
                self.error(loc, f"unknown buffer element kind '{t.elem}'")
            if t.length < 0:
                self.error(loc, f"buffer length {t.length} is negative")
            if t.space != HOST and t.space not in self.known_devices:
                self.error(loc, f"buffer space '{t.space}' names no known device")
        else:
            self.error(loc, f"unknown type {t!r}")

    # -- per-opcode rules ------------------------------------------------------

    def _check_op(self, op: HirOp, loc: str, region_kind: str) -> None:
        handler = getattr(self, "_op_" + op.opcode.replace(".", "_"), None)
        if handler is not None:
            handler(op, loc)
        if op.opcode == "hyper.reduce" and region_kind != "loop":
            self.error(loc, "hyper.reduce must be a sub-operation of hyper.for")

    def _buf(self, op: HirOp, i: int, loc: str, what: str) -> Buffer | None:
        t = op.operands[i].type
        if not isinstance(t, Buffer):
            self.error(loc, f"{what} of '{op.opcode}' must be a buffer, got {t}")
            return None
        return t

    def _op_const(self, op: HirOp, loc: str) -> None:
        value = op.attrs.get("value")
        kind = op.result.type.kind if isinstance(op.result.type, Scalar) else None
        if kind is None:
            self.error(loc, "const result must be scalar")
        elif kind == "f64":
            if not isinstance(value, (int, float)):
                self.error(loc, "const f64 needs a numeric value")
        elif not isinstance(value, int) or isinstance(value, bool):
            self.error(loc, f"const {kind} needs an integer value, got {value!r}")

    def _check_int_binop(self, op: HirOp, loc: str) -> None:
        ta, tb = (o.type for o in op.operands)
        if not isinstance(ta, Scalar) or ta.kind not in INT_KINDS or ta != tb:
            self.error(loc, f"'{op.opcode}' needs two integer scalars of one kind")
        elif op.results and op.result.type != ta:
            self.error(loc, f"'{op.opcode}' result type must match operands")

    _op_addi = _check_int_binop
    _op_muli = _check_int_binop

    def _op_load(self, op: HirOp, loc: str) -> None:
        buf = self._buf(op, 0, loc, "operand 0")
        if buf and op.results and op.result.type != Scalar(buf.elem):
            self.error(loc, f"load from buf<{buf.elem}> must produce {buf.elem}")
        if op.operands[1].type != Scalar("index"):
            self.error(loc, "load index must have type index")

    def _op_store(self, op: HirOp, loc: str) -> None:
        buf = self._buf(op, 1, loc, "operand 1")
        if buf and op.operands[0].type != Scalar(buf.elem):
            self.error(loc, f"store into buf<{buf.elem}> needs a {buf.elem} value")
        if op.operands[2].type != Scalar("index"):
            self.error(loc, "store index must have type index")

    def _op_memref_alloc(self, op: HirOp, loc: str) -> None:
        t = op.result.type
        if not isinstance(t, Buffer) or t.space != HOST:
            self.error(loc, "memref.alloc result must be a host buffer")

    def _op_hyper_alloc(self, op: HirOp, loc: str) -> None:
        dev = op.attrs.get("device")
        t = op.result.type
        if not dev:
            self.error(loc, "hyper.alloc needs a device attribute")
        elif not isinstance(t, Buffer) or t.space != dev:
            self.error(loc, f"hyper.alloc result space must be '{dev}'")

    def _check_dealloc(self, op: HirOp, loc: str) -> None:
        self._buf(op, 0, loc, "operand")

    _op_memref_dealloc = _check_dealloc
    _op_hyper_dealloc = _check_dealloc

    def _op_memref_copy(self, op: HirOp, loc: str) -> None:
        src, dst = self._buf(op, 0, loc, "src"), self._buf(op, 1, loc, "dst")
        if src and dst and (src.elem != dst.elem or src.length != dst.length):
            self.error(loc, "memref.copy needs buffers of identical element kind and length")

    def _op_hyper_memcpy(self, op: HirOp, loc: str) -> None:
        src, dst = self._buf(op, 0, loc, "src"), self._buf(op, 1, loc, "dst")
        if not (src and dst):
            return
        if src.elem != dst.elem:
            self.error(loc, "hyper.memcpy needs matching element kinds")
            return
        src_off = op.attrs.get("src_off", 0)
        dst_off = op.attrs.get("dst_off", 0)
        count = op.attrs.get("count")
        if count is None:
            if src_off == 0 and dst_off == 0 and src.length != dst.length:
                self.error(loc, "full hyper.memcpy needs equal buffer lengths")
                return
            count = min(src.length - src_off, dst.length - dst_off)
        if src_off < 0 or dst_off < 0 or count < 0:
            self.error(loc, "hyper.memcpy offsets and count must be nonnegative")
        elif src_off + count > src.length or dst_off + count > dst.length:
            self.error(loc, "hyper.memcpy range exceeds buffer length")

    def _op_atomic_rmw(self, op: HirOp, loc: str) -> None:
        kind = op.attrs.get("kind")
        if kind not in ATOMIC_KINDS:
            self.error(loc, f"atomic_rmw kind must be one of {ATOMIC_KINDS}, got {kind!r}")
        t = op.operands[0].type
        if not isinstance(t, Scalar) or t.kind not in INT_KINDS:
            self.error(loc, "atomic_rmw operates on integer scalars")
            return
        if len(op.operands) == 2:
            if op.operands[1].type != t:
                self.error(loc, "atomic_rmw combine form needs two operands of one type")
        else:
            buf = self._buf(op, 1, loc, "target")
            if buf and buf.elem != t.kind:
                self.error(loc, "atomic_rmw value kind must match target buffer element")
            if op.operands[2].type != Scalar("index"):
                self.error(loc, "atomic_rmw index must have type index")
        if op.results and op.result.type != t:
            self.error(loc, "atomic_rmw result type must match its value operand")

    def _check_bindings(self, op: HirOp, loc: str) -> None:
        devices = op.attrs.get("devices")
        if not devices:
            self.error(loc, f"'{op.opcode}' needs a non-empty devices list")
            return
        total = 0.0
        seen: set[str] = set()
        for b in devices:
            if b.target_id in seen:
                self.error(loc, f"duplicate device binding target '{b.target_id}'")
            seen.add(b.target_id)
            if not 0.0 <= b.duty_ratio <= 1.0:
                self.error(loc, f"duty ratio {b.duty_ratio} outside [0, 1]")
            total += b.duty_ratio
        if abs(total - 1.0) > RATIO_SUM_TOL:
            self.error(loc, f"duty ratios sum to {total:.10g}")

    def _op_hyper_for(self, op: HirOp, loc: str) -> None:
        self._check_bindings(op, loc)
        lb, ub = op.attrs.get("lb"), op.attrs.get("ub")
        if not isinstance(lb, int) or not isinstance(ub, int) or lb > ub:
            self.error(loc, f"bad loop bounds [{lb}, {ub})")
        n_ins = op.attrs.get("n_ins", 0)
        if not 0 <= n_ins <= len(op.operands):
            self.error(loc, "n_ins must split the operand list")
        for operand in op.operands:
            if not isinstance(operand.type, Buffer):
                self.error(loc, "hyper.for ins/outs must be buffers")
        self._check_loop_body(op, loc)
        if not (op.regions and op.regions[0].blocks):
            return
        reduces = [o for o in op.body().ops if o.opcode == "hyper.reduce"]
        if len(reduces) != len(op.results):
            self.error(
                loc,
                f"loop has {len(op.results)} result(s) but {len(reduces)} hyper.reduce op(s)",
            )
        else:
            for r, red in zip(op.results, reduces):
                if red.operands and r.type != red.operands[0].type:
                    self.error(loc, "loop result type must match its hyper.reduce operand")

    def _check_loop_body(self, op: HirOp, loc: str) -> None:
        if not op.regions or not op.regions[0].blocks:
            self.error(loc, f"'{op.opcode}' needs a body region")
            return
        block = op.body()
        if len(block.args) != 1 or block.args[0].type != Scalar("index"):
            self.error(loc, f"'{op.opcode}' body must take one index argument")

    def _check_lowered_loop(self, op: HirOp, loc: str) -> None:
        if not op.attrs.get("device"):
            self.error(loc, f"'{op.opcode}' needs a device attribute")
        lb, ub = op.attrs.get("lb"), op.attrs.get("ub")
        if not isinstance(lb, int) or not isinstance(ub, int) or lb > ub:
            self.error(loc, f"bad loop bounds [{lb}, {ub})")
        self._check_loop_body(op, loc)
        if not (op.regions and op.regions[0].blocks):
            return
        reduces = [o for o in op.body().ops if o.opcode == "hyper.reduce"]
        if len(reduces) != len(op.results):
            self.error(loc, "loop results must match contained hyper.reduce ops")

    _op_par_loop = _check_lowered_loop

    def _op_dev_launch(self, op: HirOp, loc: str) -> None:
        self._check_lowered_loop(op, loc)
        if op.attrs.get("offset", 0) < 0:
            self.error(loc, "dev.launch offset must be nonnegative")

    def _op_hyper_reduce(self, op: HirOp, loc: str) -> None:
        t = op.operands[0].type
        if not isinstance(t, Scalar):
            self.error(loc, "hyper.reduce operand must be scalar")
            return
        block = op.regions[0].blocks[0] if op.regions and op.regions[0].blocks else None
        if block is None:
            return
        if len(block.args) != 2 or block.args[0].type != t or block.args[1].type != t:
            self.error(loc, f"reduce region must take two arguments of type {t}")
        if block.ops and block.ops[-1].opcode == "hyper.reduce.return":
            rv = block.ops[-1].operands[0]
            if rv.type != t:
                self.error(loc, f"hyper.reduce.return must yield {t}")

    def _op_crypto_digest(self, op: HirOp, loc: str) -> None:
        alg = op.attrs.get("alg")
        if alg not in DIGEST_LEN:
            self.error(loc, f"unknown digest algorithm {alg!r}")
        if not isinstance(op.attrs.get("msg_len"), int) or op.attrs["msg_len"] <= 0:
            self.error(loc, "crypto.digest needs a positive msg_len")
        for i, name in ((0, "messages"), (1, "output")):
            buf = self._buf(op, i, loc, name)
            if buf and buf.elem != "i8":
                self.error(loc, f"crypto.digest {name} buffer must hold i8")
        if op.operands[2].type != Scalar("index"):
            self.error(loc, "crypto.digest index must have type index")

    def _op_crypto_hash_batch(self, op: HirOp, loc: str) -> None:
        alg = op.attrs.get("alg")
        count = op.attrs.get("count")
        msg_len = op.attrs.get("msg_len")
        if alg not in DIGEST_LEN:
            self.error(loc, f"unknown digest algorithm {alg!r}")
            return
        if not isinstance(count, int) or count < 0 or not isinstance(msg_len, int) or msg_len <= 0:
            self.error(loc, "crypto.hash_batch needs count >= 0 and msg_len > 0")
            return
        self._check_bindings(op, loc)
        msgs, out = self._buf(op, 0, loc, "messages"), self._buf(op, 1, loc, "output")
        if msgs and (msgs.elem != "i8" or msgs.length != count * msg_len):
            self.error(loc, f"messages buffer must be buf<i8, {count * msg_len}>")
        if out and (out.elem != "i8" or out.length != count * DIGEST_LEN[alg]):
            self.error(loc, f"output buffer must be buf<i8, {count * DIGEST_LEN[alg]}>")

    def _op_hyper_reduce_return(self, op: HirOp, loc: str) -> None:
        if not isinstance(op.operands[0].type, Scalar):
            self.error(loc, "hyper.reduce.return needs a scalar operand")


def verify(module: HirModule) -> list[Diagnostic]:
    """Return all structural violations; empty means the module is well-formed."""
    return _Checker(module).run()
