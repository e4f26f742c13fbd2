"""Graph-driven removal of redundant host-side data management.

Every eligible device allocation is mapped onto host memory by walking its
copy edges: a device buffer bridging two host buffers collapses into a direct
host copy, a device buffer mirroring a single host buffer is merged into it,
and an isolated device buffer becomes a plain host allocation. Afterwards no
eligible device-alloc node remains; the staging hyper ops are erased and uses
of device buffers are rewired to their mapped host buffers.

Eligibility is decided by the device table: a hyper.alloc participates when
its target executes host-mapped (the host itself or an accel flagged
host_mapped). Without a table every device alloc is eligible. A node touched
by a copy the graph cannot model (partial ranges, device-to-device) is left
untouched and reported in the pass statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..hir.core import (
    Block,
    Buffer,
    Function,
    HirModule,
    HirOp,
    Value,
    clone_module,
    max_value_id,
    walk_ops,
)
from ..runtime.devices import DeviceTable
from .dataflow import DfgEdge, build_function_graph


@dataclass
class HostMemOptStats:
    device_allocs_removed: int = 0
    copies_removed: int = 0
    copies_created: int = 0
    skipped_ineligible: int = 0
    skipped_unmodelable: list[str] = field(default_factory=list)


def _is_full_copy(op: HirOp) -> bool:
    if any(k in op.attrs for k in ("src_off", "dst_off", "count")):
        src, dst = (o.type for o in op.operands)
        return (
            op.attrs.get("src_off", 0) == 0
            and op.attrs.get("dst_off", 0) == 0
            and op.attrs.get("count", src.length) == src.length == dst.length
        )
    return op.operands[0].type.length == op.operands[1].type.length


def host_mem_opt(module: HirModule, devices: DeviceTable | None = None) -> HirModule:
    """Return a copy of the module with eligible device staging eliminated."""
    module = clone_module(module)
    for func in module.functions:
        _optimize_function(func, devices)
    return module


def host_mem_opt_stats(
    module: HirModule, devices: DeviceTable | None = None
) -> tuple[HirModule, HostMemOptStats]:
    module = clone_module(module)
    stats = HostMemOptStats()
    for func in module.functions:
        _optimize_function(func, devices, stats)
    return module, stats


def _optimize_function(
    func: Function, devices: DeviceTable | None, stats: HostMemOptStats | None = None
) -> None:
    stats = stats if stats is not None else HostMemOptStats()
    g = build_function_graph(func)

    def initially_eligible(nid: int) -> bool:
        node = g.nodes[nid]
        if node.kind != "device":
            return False
        if devices is None:
            return True
        return devices.is_host_mapped(node.op.attrs.get("device", ""))

    eligible = {nid for nid in g.nodes_u if initially_eligible(nid)}
    stats.skipped_ineligible += len(g.nodes_u) - len(eligible)

    # A copy is modelable when it joins one eligible device node with one host
    # node and moves the whole buffer. Anything else pins its device endpoints.
    work_edges: list[DfgEdge] = []
    for e in g.edges:
        src_kind = g.nodes[e.src].kind
        dst_kind = g.nodes[e.dst].kind
        touches = {n for n in (e.src, e.dst) if g.nodes[n].kind == "device"}
        ok = (
            {src_kind, dst_kind} == {"device", "host"}
            and _is_full_copy(e.op)
            and touches <= eligible
        )
        if ok and touches:
            work_edges.append(e)
        elif touches & eligible:
            for nid in touches & eligible:
                eligible.discard(nid)
                stats.skipped_unmodelable.append(
                    f"device alloc at op {g.nodes[nid].pos} pinned by copy at op {e.pos}"
                )
    work_edges = [
        e for e in work_edges if {n for n in (e.src, e.dst) if g.nodes[n].kind == "device"} <= eligible
    ]
    if not eligible:
        return

    # Algorithm state: mapping of eliminated device nodes to host values,
    # surviving host-to-host copies, and erased/inserted op positions.
    mapping: dict[int, Value] = {}
    new_copies: list[tuple[Value, Value, int]] = []  # (src host val, dst host val, pos)
    fresh_allocs: dict[int, Buffer] = {}  # device node -> host buffer type for isolated nodes
    edges = list(work_edges)

    def host_value(nid: int) -> Value:
        return g.nodes[nid].value

    for u in [nid for nid in g.nodes_u if nid in eligible]:
        for e in [e for e in edges if e.src == u]:
            v = e.dst
            if u not in mapping:
                incoming = [f for f in edges if f.dst == u and f.src != v]
                if incoming:
                    w_edge = incoming[0]  # first in program order
                    mapping[u] = host_value(w_edge.src)
                    new_copies.append((host_value(w_edge.src), host_value(v), e.pos))
                    edges.remove(w_edge)
                else:
                    mapping[u] = host_value(v)
            else:
                new_copies.append((mapping[u], host_value(v), e.pos))
            edges.remove(e)
        for e in [e for e in edges if e.dst == u]:
            if u not in mapping:
                mapping[u] = host_value(e.src)
            else:
                new_copies.append((host_value(e.src), mapping[u], e.pos))
            edges.remove(e)
        if u not in mapping:
            node = g.nodes[u]
            t: Buffer = node.value.type
            fresh_allocs[u] = Buffer(t.elem, t.length)

    # Translate the simplified graph back to IR.
    eliminated_values = {id(g.nodes[u].value) for u in eligible}
    copies_at: dict[int, list[tuple[Value, Value]]] = {}
    for src, dst, pos in new_copies:
        if src is not dst:
            copies_at.setdefault(pos, []).append((src, dst))
            stats.copies_created += 1

    new_ops: list[HirOp] = []
    replacement: dict[int, Value] = {}
    next_value_id = max_value_id(func) + 1
    for u, buf_type in fresh_allocs.items():
        fresh = Value(next_value_id, buf_type)
        next_value_id += 1
        replacement[id(g.nodes[u].value)] = fresh
        fresh_allocs[u] = (buf_type, fresh)
    for u in eligible:
        if u not in fresh_allocs:
            replacement[id(g.nodes[u].value)] = mapping[u]

    for pos, op in enumerate(func.body.ops):
        erase = False
        if op.opcode == "hyper.alloc" and id(op.result) in eliminated_values:
            node_id = g.by_value[id(op.result)]
            if node_id in fresh_allocs:
                _, fresh = fresh_allocs[node_id]
                new_ops.append(HirOp("memref.alloc", [], [fresh]))
            stats.device_allocs_removed += 1
            erase = True
        elif op.opcode == "hyper.dealloc" and id(op.operands[0]) in eliminated_values:
            erase = True
        elif op.opcode == "hyper.memcpy":
            src = g.by_value.get(id(op.operands[0]))
            dst = g.by_value.get(id(op.operands[1]))
            if (src in eligible) or (dst in eligible):
                stats.copies_removed += 1
                erase = True
        if not erase:
            new_ops.append(op)
        for src, dst in copies_at.get(pos, ()):  # inserted at the erased copy's position
            new_ops.append(HirOp("memref.copy", [src, dst]))
    func.body.ops = new_ops

    _rewire_uses(func.body, replacement)


def _rewire_uses(block: Block, replacement: dict[int, Value]) -> None:
    if not replacement:
        return
    for _, _, op in walk_ops(block):
        op.operands = [replacement.get(id(o), o) for o in op.operands]
