"""The synthesis-time strength-reduction decision: multiplier or shift/add network."""

from __future__ import annotations

from itertools import count, product
from typing import Iterator

from ..decompiler.ir import Imm, IrOp
from ..errors import NoFeasibleImpl
from ..passes.promote import ShiftAdd, csd_expand
from .region import HwRegion
from .resources import ResourceSet

USE_MULTIPLIER = "UseMultiplier"
USE_SHIFT_ADD = "UseShiftAdd"
EXHAUSTIVE_LIMIT = 6       # up to 2**6 combinations per block are compared exactly


def alternative(op: IrOp) -> ShiftAdd | None:
    """The shift/add form of a multiply, from the promotion annotation or by recoding its constant."""
    alt = op.anno.get("promoted")
    if alt is not None:
        return alt
    c = op.operands[1] if len(op.operands) == 2 else None
    if isinstance(c, Imm) and c.value & 0xFFFFFFFF:
        return csd_expand(c.value)
    return None


def expand(op: IrOp, ids: Iterator[int]) -> list[IrOp]:
    """Ops computing ``op`` with shifts, adds and subs; the last one keeps ``op.id``."""
    alt = alternative(op)
    if alt is None:
        raise NoFeasibleImpl(f"mul node {op.id} has no constant factor to recode")
    x = op.operands[0]
    out: list[IrOp] = []
    memo: dict[int, object] = {}

    def emit(e: ShiftAdd):
        if e.kind == "x":
            return x
        if e.kind == "zero":
            return Imm(0)
        if id(e) in memo:
            return memo[id(e)]
        if e.kind == "shl":
            args = [emit(e.a), Imm(e.shift)]
        else:
            args = [emit(e.a), emit(e.b)]
        n = IrOp(next(ids), e.kind, args, width=op.width, origin=op.origin, block=op.block)
        out.append(n)
        memo[id(e)] = n.id
        return n.id

    root = emit(alt)
    if not out:                    # x * 1
        out.append(IrOp(next(ids), "copy", [root], width=op.width, origin=op.origin, block=op.block))
    last = out[-1]
    old = last.id
    last.id = op.id
    for n in out:
        n.operands = [op.id if o == old else o for o in n.operands]
    return out


def _apply(hw: HwRegion, choice: dict[int, str], ids) -> HwRegion:
    out = hw.copy()
    for b in out.blocks:
        new = []
        for op in out.ops[b]:
            if op.kind == "mul" and choice.get(op.id) == USE_SHIFT_ADD:
                new.extend(expand(op, ids))
            else:
                new.append(op)
        out.ops[b] = new
    return out


def _fresh(hw: HwRegion):
    return count(1 + max((op.id for op in hw.all_ops()), default=0) + (1 << 24))


def apply_decisions(hw: HwRegion, decisions: dict[int, str]) -> HwRegion:
    return _apply(hw, decisions, _fresh(hw))


def _length(hw: HwRegion, block: int, choice, resources) -> int:
    from .schedule import schedule_block
    trial = _apply(hw, choice, _fresh(hw))
    return schedule_block(trial, block, resources).length


def decide_multiplier_impl(op: IrOp, resources: ResourceSet, hw: HwRegion | None = None,
                           fixed: dict[int, str] | None = None) -> str:
    """Pick the form that gives the shorter schedule of the node's block; ties keep the multiplier."""
    alt = alternative(op)
    if resources.multiplier == 0:
        if alt is None:
            raise NoFeasibleImpl(f"mul node {op.id}: no multiplier and no constant factor")
        if resources.adder == 0 or resources.shifter == 0:
            raise NoFeasibleImpl(f"mul node {op.id}: no multiplier and no adder/shifter")
        return USE_SHIFT_ADD
    if alt is None or resources.adder == 0 or resources.shifter == 0:
        return USE_MULTIPLIER
    if hw is None:
        from .region import cut_single
        hw = cut_single(op)
    base = dict(fixed or {})
    m = _length(hw, op.block, {**base, op.id: USE_MULTIPLIER}, resources)
    s = _length(hw, op.block, {**base, op.id: USE_SHIFT_ADD}, resources)
    return USE_SHIFT_ADD if s < m else USE_MULTIPLIER


def decide_all(hw: HwRegion, resources: ResourceSet) -> dict[int, str]:
    """Decision for every multiply of the region, block by block.

    Blocks with few multiplies try every combination; larger ones decide
    greedily in node order with earlier decisions fixed.
    """
    decisions: dict[int, str] = {}
    for b in hw.blocks:
        muls = [op for op in hw.ops[b] if op.kind == "mul"]
        if not muls:
            continue
        forced = {}
        free = []
        for op in muls:
            if resources.multiplier == 0 or alternative(op) is None or not (resources.adder and resources.shifter):
                forced[op.id] = decide_multiplier_impl(op, resources)
            else:
                free.append(op)
        decisions.update(forced)
        if len(free) <= EXHAUSTIVE_LIMIT:
            best = None
            for combo in product((USE_MULTIPLIER, USE_SHIFT_ADD), repeat=len(free)):
                choice = {**decisions, **{op.id: c for op, c in zip(free, combo)}}
                n = _length(hw, b, choice, resources)
                key = (n, sum(c == USE_SHIFT_ADD for c in combo), combo)
                if best is None or key < best[0]:
                    best = (key, choice)
            decisions.update(best[1])
        else:
            for op in free:
                decisions[op.id] = decide_multiplier_impl(op, resources, hw, decisions)
    return decisions
