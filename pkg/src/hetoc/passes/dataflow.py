"""Directed graph over allocations and copies, the input to host memory optimization.

Device allocations (hyper.alloc) form one node class, host allocations
(memref.alloc, plus host-buffer function parameters) the other; every
hyper.memcpy contributes one edge from its source node to its destination
node, in program order. Only top-level ops of a function participate: data
management inside loop bodies is outside this model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..hir.core import Buffer, Function, HirModule, HirOp, Value
from ..hir.verify import Diagnostic


@dataclass
class DfgNode:
    id: int
    kind: str  # "device" | "host"
    value: Value
    op: HirOp | None  # defining alloc; None for function parameters
    pos: int  # top-level op index (parameters use -1)


@dataclass
class DfgEdge:
    src: int
    dst: int
    op: HirOp
    pos: int


@dataclass
class DataflowGraph:
    nodes_u: list[int] = field(default_factory=list)  # device-alloc nodes, program order
    nodes_v: list[int] = field(default_factory=list)  # host-alloc nodes, program order
    edges: list[DfgEdge] = field(default_factory=list)
    nodes: dict[int, DfgNode] = field(default_factory=dict)
    by_value: dict[int, int] = field(default_factory=dict)  # id(Value) -> node id
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def node_origin(self) -> dict[int, HirOp | None]:
        return {n.id: n.op for n in self.nodes.values()}

    def node_of(self, value: Value) -> DfgNode | None:
        nid = self.by_value.get(id(value))
        return None if nid is None else self.nodes[nid]

    def edge_pairs(self) -> list[tuple[int, int]]:
        return [(e.src, e.dst) for e in self.edges]


def build_function_graph(func: Function) -> DataflowGraph:
    g = DataflowGraph()
    next_id = 0

    def add_node(kind: str, value: Value, op: HirOp | None, pos: int) -> None:
        nonlocal next_id
        node = DfgNode(next_id, kind, value, op, pos)
        g.nodes[node.id] = node
        g.by_value[id(value)] = node.id
        (g.nodes_u if kind == "device" else g.nodes_v).append(node.id)
        next_id += 1

    for p in func.params:
        if isinstance(p.type, Buffer):
            add_node("host", p, None, -1)

    for pos, op in enumerate(func.body.ops):
        if op.opcode == "memref.alloc":
            add_node("host", op.result, op, pos)
        elif op.opcode == "hyper.alloc":
            add_node("device", op.result, op, pos)

    for pos, op in enumerate(func.body.ops):
        if op.opcode != "hyper.memcpy":
            continue
        src = g.by_value.get(id(op.operands[0]))
        dst = g.by_value.get(id(op.operands[1]))
        if src is None or dst is None:
            g.diagnostics.append(
                Diagnostic(
                    "error",
                    f"{func.name}#{pos}",
                    "hyper.memcpy operand is not a direct alloc result; aliasing is unsupported",
                )
            )
            continue
        g.edges.append(DfgEdge(src, dst, op, pos))
    return g


def build_dataflow_graph(module: HirModule) -> DataflowGraph:
    """Graph for the module's main function (the unit host_mem_opt rewrites)."""
    return build_function_graph(module.main())
