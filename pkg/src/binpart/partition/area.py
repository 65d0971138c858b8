"""Equivalent-gate area estimates from a per-kind, per-width table."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from ..decompiler.cdfg import Cdfg
from ..decompiler.ir import COMPARES, LOGIC, SHIFTS, Imm, IrOp
from ..passes.promote import csd_expand


@dataclass(frozen=True)
class GateTable:
    adder: float = 12          # per bit, add and sub
    multiplier: float = 20     # per bit squared
    mul_scale: float = 1.0
    shifter: float = 8         # per bit per stage
    logic: float = 4           # per bit
    compare: float = 8         # per bit of the compared operands
    register: float = 8        # per bit
    mux: float = 4             # per bit per extra phi input
    control: float = 4         # one state-transition term per branch/jump/return
    tie: float = 1             # per bit of a constant

    def op_gates(self, op: IrOp, widths: dict[int, int] | None = None) -> float:
        """Gates for one node; ``widths`` gives operand widths for compares."""
        k, w = op.kind, op.width
        if k in ("add", "sub"):
            return self.adder * w
        if k == "mul":
            full = self.multiplier * w * w * self.mul_scale
            c = op.operands[1] if len(op.operands) == 2 else None
            if isinstance(c, Imm) and c.value & 0xFFFFFFFF:
                # a constant factor can be wired as shifts feeding an adder tree
                adds = csd_expand(c.value).counts()["add"]
                return min(full, max(1, adds) * self.adder * w)
            return full
        if k in SHIFTS:
            return self.shifter * w * max(1, math.ceil(math.log2(w))) if w > 1 else self.shifter
        if k in LOGIC:
            return self.logic * w
        if k in COMPARES:
            ow = max((_operand_width(o, widths) for o in op.operands), default=32)
            return self.compare * ow
        if k == "phi":
            return self.register * w + self.mux * w * max(0, len(op.operands) - 1)
        if k in ("load", "store"):
            return self.register * 32          # address / data latch on the memory port
        if k == "const":
            return self.tie * w
        if k in ("branch_cond", "jump", "return", "halt"):
            return self.control
        return self.register * w               # params, projections, anything held in a register


def _operand_width(o, widths) -> int:
    if isinstance(o, Imm):
        return max(1, (o.value & 0xFFFFFFFF).bit_length())
    return (widths or {}).get(o, 32)


DEFAULT_TABLE = GateTable()


def estimate_ops(ops: Iterable[IrOp], table: GateTable = DEFAULT_TABLE, widths=None) -> int:
    return int(round(sum(table.op_gates(op, widths) for op in ops)))


def estimate_area(region, cdfg: Cdfg, table: GateTable = DEFAULT_TABLE) -> int:
    """Gates for the blocks of ``region`` (anything with a ``blocks`` set, or a block set)."""
    blocks = getattr(region, "blocks", region)
    widths = {op.id: op.width for op in cdfg.ops()}
    ops = [op for b in sorted(blocks) if b in cdfg.blocks for op in cdfg.blocks[b].ops]
    return estimate_ops(ops, table, widths)


__all__ = ["GateTable", "DEFAULT_TABLE", "estimate_area", "estimate_ops"]
