"""In-memory SSA IR: typed values, ops with regions, functions, modules.

Ops consume existing values and define new ones (SSA). Loop-like ops
(hyper.for, par.loop, dev.launch) hold a single-block body region whose first
block argument is the induction variable; bounds are static integers with an
implicit step of one. A module is mutable while being built and is treated as
immutable once it verifies; passes clone before rewriting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SCALAR_KINDS = ("i8", "i32", "i64", "f64", "index")

INT_KINDS = ("i8", "i32", "i64", "index")

# Reserved memory space / device id for host-resident buffers.
HOST = "host"

RATIO_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Scalar:
    kind: str

    def __str__(self):
        return self.kind


@dataclass(frozen=True)
class Buffer:
    elem: str
    length: int
    space: str = HOST

    def __str__(self):
        if self.space == HOST:
            return f"buf<{self.elem}, {self.length}>"
        return f'buf<{self.elem}, {self.length}, "{self.space}">'


HirType = Scalar | Buffer

INDEX = Scalar("index")
I8 = Scalar("i8")
I32 = Scalar("i32")
I64 = Scalar("i64")
F64 = Scalar("f64")


def scalar_bits(kind: str) -> int:
    return {"i8": 8, "i32": 32, "i64": 64, "f64": 64, "index": 64}[kind]


def elem_bytes(kind: str) -> int:
    return scalar_bits(kind) // 8


@dataclass(eq=False)
class Value:
    """An SSA value. Identity is object identity; ``id`` is the print name."""

    id: int
    type: HirType

    def __repr__(self):
        return f"%{self.id}: {self.type}"


@dataclass
class DeviceBinding:
    """One device's share of a parallel loop."""

    target_id: str
    duty_ratio: float
    target_config: dict[str, int] = field(default_factory=dict)


@dataclass
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


@dataclass
class Block:
    args: list[Value] = field(default_factory=list)
    ops: list[HirOp] = field(default_factory=list)


@dataclass
class Region:
    blocks: list[Block] = field(default_factory=list)

    @property
    def block(self) -> Block:
        return self.blocks[0]


@dataclass(eq=False)
class HirOp:
    opcode: str
    operands: list[Value] = field(default_factory=list)
    results: list[Value] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)
    regions: list[Region] = field(default_factory=list)
    loc: SourceSpan | None = None

    @property
    def result(self) -> Value:
        return self.results[0]

    def region(self) -> Region:
        return self.regions[0]

    def body(self) -> Block:
        return self.regions[0].blocks[0]


@dataclass
class Function:
    name: str
    params: list[Value] = field(default_factory=list)
    body: Block = field(default_factory=Block)
    # source-level parameter names, kept for binding named inputs at execution
    param_names: list[str] | None = None


@dataclass
class HirModule:
    functions: list[Function] = field(default_factory=list)

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(f"no function named {name!r}")

    def main(self) -> Function:
        return self.function("main")

    def device_ids(self) -> set[str]:
        """Every device id referenced by alloc attrs or device bindings."""
        ids: set[str] = set()

        def visit(block: Block):
            for op in block.ops:
                dev = op.attrs.get("device")
                if dev is not None:
                    ids.add(dev)
                for b in op.attrs.get("devices", ()):
                    ids.add(b.target_id)
                for region in op.regions:
                    for blk in region.blocks:
                        visit(blk)

        for f in self.functions:
            visit(f.body)
        return ids


# Fixed operand/result signature table. Entries are
# (min_operands, max_operands, n_results_fixed_or_None, n_regions).
# Variadic shapes (hyper.for, par.loop, dev.launch, return) use None and are
# checked structurally by the verifier.
OP_SIGNATURES: dict[str, tuple[int, int | None, int | None, int]] = {
    "const": (0, 0, 1, 0),
    "addi": (2, 2, 1, 0),
    "muli": (2, 2, 1, 0),
    "load": (2, 2, 1, 0),
    "store": (3, 3, 0, 0),
    "memref.alloc": (0, 0, 1, 0),
    "memref.dealloc": (1, 1, 0, 0),
    "memref.copy": (2, 2, 0, 0),
    "atomic_rmw": (2, 3, 1, 0),
    "hyper.alloc": (0, 0, 1, 0),
    "hyper.dealloc": (1, 1, 0, 0),
    "hyper.memcpy": (2, 2, 0, 0),
    "hyper.for": (0, None, None, 1),
    "hyper.reduce": (1, 1, 0, 1),
    "hyper.reduce.return": (1, 1, 0, 0),
    "crypto.digest": (3, 3, 0, 0),
    "crypto.hash_batch": (2, 2, 0, 0),
    "dev.launch": (0, 0, None, 1),
    "par.loop": (0, 0, None, 1),
    "yield": (0, 0, 0, 0),
    "return": (0, None, 0, 0),
}

TERMINATORS = ("yield", "hyper.reduce.return", "return")

LOOP_OPCODES = ("hyper.for", "par.loop", "dev.launch")

ATOMIC_KINDS = ("addi", "maxs", "mins")


class FuncBuilder:
    """Convenience builder producing SSA-correct functions."""

    def __init__(self, name: str, param_types: list[HirType] | None = None):
        self._next_id = 0
        self.func = Function(name=name)
        for t in param_types or []:
            self.func.params.append(self.new_value(t))
        self._blocks = [self.func.body]

    def new_value(self, type: HirType) -> Value:
        v = Value(self._next_id, type)
        self._next_id += 1
        return v

    @property
    def block(self) -> Block:
        return self._blocks[-1]

    def emit(self, op: HirOp) -> HirOp:
        self.block.ops.append(op)
        return op

    def op(self, opcode: str, operands=(), result_types=(), attrs=None, regions=()) -> HirOp:
        results = [self.new_value(t) for t in result_types]
        return self.emit(
            HirOp(opcode, list(operands), results, dict(attrs or {}), list(regions))
        )

    # -- data ops ----------------------------------------------------------

    def const(self, value, type: HirType = INDEX) -> Value:
        return self.op("const", attrs={"value": value}, result_types=[type]).result

    def addi(self, a: Value, b: Value) -> Value:
        return self.op("addi", [a, b], result_types=[a.type]).result

    def muli(self, a: Value, b: Value) -> Value:
        return self.op("muli", [a, b], result_types=[a.type]).result

    def load(self, buf: Value, idx: Value) -> Value:
        return self.op("load", [buf, idx], result_types=[Scalar(buf.type.elem)]).result

    def store(self, value: Value, buf: Value, idx: Value) -> HirOp:
        return self.op("store", [value, buf, idx])

    def memref_alloc(self, elem: str, length: int) -> Value:
        return self.op("memref.alloc", result_types=[Buffer(elem, length)]).result

    def memref_dealloc(self, buf: Value) -> HirOp:
        return self.op("memref.dealloc", [buf])

    def memref_copy(self, src: Value, dst: Value) -> HirOp:
        return self.op("memref.copy", [src, dst])

    def hyper_alloc(self, elem: str, length: int, device: str) -> Value:
        return self.op(
            "hyper.alloc",
            attrs={"device": device},
            result_types=[Buffer(elem, length, device)],
        ).result

    def hyper_dealloc(self, buf: Value) -> HirOp:
        return self.op("hyper.dealloc", [buf])

    def hyper_memcpy(self, src: Value, dst: Value, **offsets) -> HirOp:
        return self.op("hyper.memcpy", [src, dst], attrs=offsets)

    def atomic_rmw(self, kind: str, value: Value, buf: Value, idx: Value) -> Value:
        return self.op(
            "atomic_rmw", [value, buf, idx], attrs={"kind": kind}, result_types=[value.type]
        ).result

    def atomic_combine(self, kind: str, a: Value, b: Value) -> Value:
        return self.op("atomic_rmw", [a, b], attrs={"kind": kind}, result_types=[a.type]).result

    def ret(self, *values: Value) -> HirOp:
        return self.op("return", list(values))

    def yield_(self) -> HirOp:
        return self.op("yield")

    # -- loops and regions ---------------------------------------------------

    def _loop_region(self, body_fn) -> Region:
        iv = self.new_value(INDEX)
        block = Block(args=[iv])
        self._blocks.append(block)
        body_fn(iv)
        if not block.ops or block.ops[-1].opcode not in TERMINATORS:
            self.yield_()
        self._blocks.pop()
        return Region(blocks=[block])

    def hyper_for(
        self,
        lb: int,
        ub: int,
        devices: list[DeviceBinding],
        body_fn,
        *,
        shared: bool = False,
        ins: list[Value] = (),
        outs: list[Value] = (),
        result_types: list[HirType] = (),
    ) -> HirOp:
        region = self._loop_region(body_fn)
        return self.op(
            "hyper.for",
            list(ins) + list(outs),
            result_types=result_types,
            attrs={"lb": lb, "ub": ub, "devices": devices, "shared": shared, "n_ins": len(ins)},
            regions=[region],
        )

    def hyper_reduce(self, value: Value, kind: str = "addi") -> HirOp:
        """Reduce with a canonical two-argument combine region of the given kind."""
        x = self.new_value(value.type)
        y = self.new_value(value.type)
        block = Block(args=[x, y])
        self._blocks.append(block)
        z = self.atomic_combine(kind, x, y) if kind != "addi" else self.addi(x, y)
        self.op("hyper.reduce.return", [z])
        self._blocks.pop()
        return self.op("hyper.reduce", [value], regions=[Region(blocks=[block])])

    def par_loop(self, lb: int, ub: int, device: str, body_fn, result_types=()) -> HirOp:
        region = self._loop_region(body_fn)
        return self.op(
            "par.loop",
            result_types=result_types,
            attrs={"device": device, "lb": lb, "ub": ub},
            regions=[region],
        )

    def build(self) -> Function:
        if not self.func.body.ops or self.func.body.ops[-1].opcode != "return":
            self.ret()
        return self.func


def make_for(
    builder: FuncBuilder,
    lb: int,
    ub: int,
    devices: list[DeviceBinding],
    is_shared_mem: bool,
    mem_in: list[Value],
    mem_out: list[Value],
    body_fn,
    result_types: list[HirType] = (),
) -> HirOp:
    """Construct a well-formed hyper.for; rejects bad bounds and empty bindings."""
    if lb > ub:
        raise ValueError(f"loop bounds [{lb}, {ub}) are inverted")
    if not devices:
        raise ValueError("hyper.for needs at least one device binding")
    for buf in list(mem_in) + list(mem_out):
        if not isinstance(buf.type, Buffer):
            raise ValueError(f"mem_in/mem_out must be buffers, got {buf.type}")
    return builder.hyper_for(
        lb,
        ub,
        devices,
        body_fn,
        shared=is_shared_mem,
        ins=mem_in,
        outs=mem_out,
        result_types=result_types,
    )


def clone_module(module: HirModule) -> HirModule:
    """Deep structural copy with fresh Value objects (ids preserved)."""
    out = HirModule()
    for f in module.functions:
        mapping: dict[Value, Value] = {}

        def remap(v: Value) -> Value:
            if v not in mapping:
                mapping[v] = Value(v.id, v.type)
            return mapping[v]

        def clone_block(block: Block) -> Block:
            nb = Block(args=[remap(a) for a in block.args])
            for op in block.ops:
                nb.ops.append(
                    HirOp(
                        op.opcode,
                        [remap(o) for o in op.operands],
                        [remap(r) for r in op.results],
                        _clone_attrs(op.attrs),
                        [Region([clone_block(b) for b in r.blocks]) for r in op.regions],
                        op.loc,
                    )
                )
            return nb

        out.functions.append(
            Function(
                f.name,
                [remap(p) for p in f.params],
                clone_block(f.body),
                list(f.param_names) if f.param_names else None,
            )
        )
    return out


def _clone_attrs(attrs: dict) -> dict:
    new: dict = {}
    for k, v in attrs.items():
        if k == "devices":
            new[k] = [DeviceBinding(b.target_id, b.duty_ratio, dict(b.target_config)) for b in v]
        else:
            new[k] = v
    return new


def walk_ops(block: Block):
    """Yield (block, index, op) for every op, pre-order through nested regions."""
    for i, op in enumerate(block.ops):
        yield block, i, op
        for region in op.regions:
            for blk in region.blocks:
                yield from walk_ops(blk)


def max_value_id(func: Function) -> int:
    top = max((p.id for p in func.params), default=-1)
    for _, _, op in walk_ops(func.body):
        for v in op.results:
            top = max(top, v.id)
        for region in op.regions:
            for blk in region.blocks:
                top = max(top, max((a.id for a in blk.args), default=-1))
    return top


def int_limits(kind: str) -> tuple[int, int]:
    """(min, max) of a signed integer scalar kind; index counts as 64-bit."""
    bits = scalar_bits(kind)
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1
