"""Canonical text rendering of IR modules.

Printing is deterministic: values are renumbered densely per function in
definition order, attribute keys are sorted, and duty ratios always carry four
decimals. print(parse(print(m))) == print(m) for any verified m, and the
printed form of a module is its canonical identity for structural comparison.
"""

from __future__ import annotations

from .core import Block, Buffer, DeviceBinding, Function, HirModule, HirOp, Value


def format_ratio(r: float) -> str:
    return f"{r:.4f}"


def _attr_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return f'"{v}"'


class _Printer:
    def __init__(self):
        self.lines: list[str] = []
        self.names: dict[int, int] = {}
        self.counter = 0

    def define(self, v: Value) -> str:
        self.names[id(v)] = self.counter
        self.counter += 1
        return f"%{self.names[id(v)]}"

    def ref(self, v: Value) -> str:
        if id(v) not in self.names:
            # Not reachable for verified IR; keeps debugging prints usable.
            return f"%<undef:{v.id}>"
        return f"%{self.names[id(v)]}"

    def emit(self, indent: int, text: str) -> None:
        self.lines.append("  " * indent + text)

    # -- pieces ---------------------------------------------------------------

    def _bindings(self, devices: list[DeviceBinding]) -> str:
        parts = []
        for b in devices:
            fields = []
            if b.target_config:
                cfg = ", ".join(f"{k}={v}" for k, v in sorted(b.target_config.items()))
                fields.append(f"config={{{cfg}}}")
            fields.append(f"ratio={format_ratio(b.duty_ratio)}")
            fields.append(f'target="{b.target_id}"')
            parts.append("{" + ", ".join(fields) + "}")
        return "[" + ", ".join(parts) + "]"

    def _attr_dict(self, attrs: dict, skip=()) -> str:
        items = [(k, v) for k, v in sorted(attrs.items()) if k not in skip]
        if not items:
            return ""
        return " {" + ", ".join(f"{k}={_attr_value(v)}" for k, v in items) + "}"

    def _results_prefix(self, op: HirOp) -> str:
        if not op.results:
            return ""
        return ", ".join(self.define(r) for r in op.results) + " = "

    def _result_types(self, op: HirOp) -> str:
        if not op.results:
            return ""
        return " : " + ", ".join(str(r.type) for r in op.results)

    def _region_body(self, op: HirOp, indent: int) -> None:
        block = op.body()
        for inner in block.ops:
            self.op(inner, indent + 1)
        self.emit(indent, "}")

    # -- ops -----------------------------------------------------------------

    def op(self, op: HirOp, indent: int) -> None:
        m = getattr(self, "_op_" + op.opcode.replace(".", "_"), None)
        if m is None:
            raise ValueError(f"cannot print opcode '{op.opcode}'")
        m(op, indent)

    def _op_const(self, op: HirOp, indent: int) -> None:
        self.emit(
            indent,
            f"{self._results_prefix(op)}const {_attr_value(op.attrs['value'])}"
            f"{self._result_types(op)}",
        )

    def _binop(self, op: HirOp, indent: int) -> None:
        a, b = (self.ref(o) for o in op.operands)
        self.emit(indent, f"{self._results_prefix(op)}{op.opcode} {a}, {b}{self._result_types(op)}")

    _op_addi = _binop
    _op_muli = _binop

    def _op_load(self, op: HirOp, indent: int) -> None:
        buf, idx = (self.ref(o) for o in op.operands)
        self.emit(indent, f"{self._results_prefix(op)}load {buf}[{idx}]{self._result_types(op)}")

    def _op_store(self, op: HirOp, indent: int) -> None:
        v, buf, idx = (self.ref(o) for o in op.operands)
        self.emit(indent, f"store {v}, {buf}[{idx}]")

    def _op_memref_alloc(self, op: HirOp, indent: int) -> None:
        self.emit(indent, f"{self._results_prefix(op)}memref.alloc : {op.result.type}")

    def _op_hyper_alloc(self, op: HirOp, indent: int) -> None:
        t: Buffer = op.result.type
        plain = Buffer(t.elem, t.length)
        self.emit(
            indent,
            f"{self._results_prefix(op)}hyper.alloc dev(\"{op.attrs['device']}\")"
            f"{self._attr_dict(op.attrs, skip=('device',))} : {plain}",
        )

    def _dealloc(self, op: HirOp, indent: int) -> None:
        self.emit(indent, f"{op.opcode} {self.ref(op.operands[0])}{self._attr_dict(op.attrs)}")

    _op_memref_dealloc = _dealloc
    _op_hyper_dealloc = _dealloc

    def _op_memref_copy(self, op: HirOp, indent: int) -> None:
        a, b = (self.ref(o) for o in op.operands)
        self.emit(indent, f"memref.copy {a}, {b}")

    def _op_hyper_memcpy(self, op: HirOp, indent: int) -> None:
        a, b = (self.ref(o) for o in op.operands)
        self.emit(indent, f"hyper.memcpy {a}, {b}{self._attr_dict(op.attrs)}")

    def _op_atomic_rmw(self, op: HirOp, indent: int) -> None:
        kind = op.attrs["kind"]
        if len(op.operands) == 3:
            v, buf, idx = (self.ref(o) for o in op.operands)
            rhs = f"{v}, {buf}[{idx}]"
        else:
            rhs = ", ".join(self.ref(o) for o in op.operands)
        self.emit(
            indent, f"{self._results_prefix(op)}atomic_rmw {kind} {rhs}{self._result_types(op)}"
        )

    def _op_hyper_for(self, op: HirOp, indent: int) -> None:
        prefix = self._results_prefix(op)
        iv = self.define(op.body().args[0])
        n_ins = op.attrs["n_ins"]
        ins = op.operands[:n_ins]
        outs = op.operands[n_ins:]
        text = (
            f"{prefix}hyper.for {iv} = {op.attrs['lb']} to {op.attrs['ub']} "
            f"devices {self._bindings(op.attrs['devices'])} "
            f"shared={'true' if op.attrs['shared'] else 'false'}"
        )
        if ins:
            text += " ins(" + ", ".join(self.ref(o) for o in ins) + ")"
        if outs:
            text += " outs(" + ", ".join(self.ref(o) for o in outs) + ")"
        self.emit(indent, text + self._result_types(op) + " {")
        self._region_body(op, indent)

    def _op_hyper_reduce(self, op: HirOp, indent: int) -> None:
        v = op.operands[0]
        block = op.body()
        args = ", ".join(f"{self.define(a)}: {a.type}" for a in block.args)
        self.emit(indent, f"hyper.reduce {self.ref(v)} : {v.type} {{")
        self.emit(indent, f"({args}):")
        self._region_body(op, indent)

    def _op_hyper_reduce_return(self, op: HirOp, indent: int) -> None:
        self.emit(indent, f"hyper.reduce.return {self.ref(op.operands[0])}")

    def _op_crypto_digest(self, op: HirOp, indent: int) -> None:
        m, o, i = (self.ref(x) for x in op.operands)
        self.emit(indent, f"crypto.digest {m}, {o}, {i}{self._attr_dict(op.attrs)}")

    def _op_crypto_hash_batch(self, op: HirOp, indent: int) -> None:
        m, o = (self.ref(x) for x in op.operands)
        self.emit(
            indent,
            f"crypto.hash_batch {m}, {o}{self._attr_dict(op.attrs, skip=('devices',))}"
            f" devices {self._bindings(op.attrs['devices'])}",
        )

    def _op_par_loop(self, op: HirOp, indent: int) -> None:
        prefix = self._results_prefix(op)
        iv = self.define(op.body().args[0])
        self.emit(
            indent,
            f"{prefix}par.loop {iv} = {op.attrs['lb']} to {op.attrs['ub']} "
            f"device(\"{op.attrs['device']}\"){self._result_types(op)} {{",
        )
        self._region_body(op, indent)

    def _op_dev_launch(self, op: HirOp, indent: int) -> None:
        prefix = self._results_prefix(op)
        iv = self.define(op.body().args[0])
        text = (
            f"{prefix}dev.launch {iv} = {op.attrs['lb']} to {op.attrs['ub']} "
            f"device(\"{op.attrs['device']}\") offset({op.attrs.get('offset', 0)})"
        )
        if "group" in op.attrs:
            text += f" group({op.attrs['group']})"
        self.emit(indent, text + self._result_types(op) + " {")
        self._region_body(op, indent)

    def _op_yield(self, op: HirOp, indent: int) -> None:
        self.emit(indent, "yield")

    def _op_return(self, op: HirOp, indent: int) -> None:
        if not op.operands:
            self.emit(indent, "return")
            return
        vals = ", ".join(self.ref(o) for o in op.operands)
        types = ", ".join(str(o.type) for o in op.operands)
        self.emit(indent, f"return {vals} : {types}")

    # -- top level -------------------------------------------------------------

    def function(self, func: Function) -> None:
        self.names = {}
        self.counter = 0
        params = ", ".join(f"{self.define(p)}: {p.type}" for p in func.params)
        self.emit(0, f"func @{func.name}({params}) {{")
        for op in func.body.ops:
            self.op(op, 1)
        self.emit(0, "}")


def print_module(module: HirModule) -> str:
    """Render a module to its canonical textual form."""
    p = _Printer()
    for i, func in enumerate(module.functions):
        if i:
            p.lines.append("")
        p.function(func)
    return "\n".join(p.lines) + "\n"
