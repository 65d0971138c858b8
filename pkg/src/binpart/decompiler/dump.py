"""Deterministic text dump of a CDFG, used for golden-file comparisons."""

from __future__ import annotations

from .cdfg import Cdfg, CdfgProgram
from .ir import Imm, IrOp


def _operand(o) -> str:
    return f"#{o.value}" if isinstance(o, Imm) else f"n{o}"


def format_node(op: IrOp) -> str:
    if op.kind == "phi":
        ops = [f"{_operand(o)}:b{p}" for o, p in zip(op.operands, op.preds)]
    else:
        ops = [_operand(o) for o in op.operands]
    if op.kind == "const":
        ops.append(f"#{op.value}")
    if op.kind in ("load", "store"):
        ops.append(f"size={op.size}{'s' if op.signed else ''}")
    if op.kind in ("param", "proj"):
        ops.append(f"r{op.reg}")
    if op.kind == "call":
        ops.append(f"callee={op.callee:08x}")
    if op.kind == "branch_cond" and op.negate:
        ops.append("negate")
    if "promoted" in op.anno:
        ops.append("alt=" + op.anno["promoted"].describe())
    return " ".join(["node", str(op.id), op.kind, str(op.width), *ops, f"@{op.origin:08x}"])


def dump_cdfg(g: Cdfg) -> str:
    lines = [f"proc {g.name} {g.entry_addr:08x} entry b{g.entry}"]
    for bid in sorted(g.blocks):
        b = g.blocks[bid]
        lines.append(f"block b{bid} {b.start:08x}")
        lines.extend(format_node(op) for op in b.ops)
    lines.extend(f"dedge n{a} n{b}" for a, b in g.data_edges())
    lines.extend(f"medge n{a} n{b}" for a, b in g.mem_edges)
    for bid in sorted(g.blocks):
        lines.extend(f"cedge b{bid} b{s}" for s in dict.fromkeys(g.blocks[bid].succs))
    return "\n".join(lines) + "\n"


def dump_program(p: CdfgProgram) -> str:
    return "".join(dump_cdfg(p.procedures[a]) for a in sorted(p.procedures))
