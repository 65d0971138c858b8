"""A partitioned region cut out of its procedure graph, ready for synthesis."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..decompiler.cdfg import Cdfg, CdfgProgram
from ..decompiler.execute import CdfgMachine
from ..decompiler.ir import MASK32, NON_SYNTH, Imm, IrOp
from ..errors import UnsynthesizableRegion


@dataclass
class HwRegion:
    id: str
    proc: int                                # owning procedure's entry address
    entry: int                               # block where hardware takes over
    blocks: list[int]                        # entry first, then ascending
    ops: dict[int, list[IrOp]]               # private copies, may be rewritten by synthesis
    succs: dict[int, list[int]]
    live_ins: list[int]                      # node ids supplied by software (entry phis, params, outside values)
    live_outs: list[int]                     # region values software reads afterwards
    exits: list[tuple[int, int]]             # (src, dst) edges leaving the region
    whole_procedure: bool = False
    returns: tuple[int, ...] = ()            # registers carried by return (whole procedures)
    mem_edges: list[tuple[int, int]] = field(default_factory=list)

    def all_ops(self):
        for b in self.blocks:
            yield from self.ops[b]

    def nodes(self) -> dict[int, IrOp]:
        return {op.id: op for op in self.all_ops()}

    def op_count(self) -> int:
        return sum(1 for op in self.all_ops() if op.kind not in ("phi", "param"))

    def copy(self) -> "HwRegion":
        return copy.deepcopy(self)


def extract_region(program: CdfgProgram, region) -> HwRegion:
    """Copy the blocks of a partitioner Region (loop or whole procedure) out of ``program``."""
    g = program.procedures[region.proc]
    whole = region.kind == "ProcedureBody"
    if whole and not getattr(region, "whole_procedure", True):
        raise UnsynthesizableRegion(f"{region.id}: procedure body around loops is not one region")
    return cut_region(g, region.id, frozenset(region.blocks),
                      g.entry if whole else region.header, whole)


def cut_region(g: Cdfg, rid: str, blocks: frozenset, entry: int, whole: bool = False) -> HwRegion:
    for b in blocks:
        for op in g.blocks[b].ops:
            if op.kind in NON_SYNTH:
                raise UnsynthesizableRegion(f"{rid}: {op.kind} node {op.id} cannot run in hardware")
            if op.kind == "return" and not whole:
                raise UnsynthesizableRegion(f"{rid}: return inside a loop region")
            if op.kind == "jump" and op.operands:
                raise UnsynthesizableRegion(f"{rid}: indirect jump")
    order = [entry] + sorted(b for b in blocks if b != entry)
    defined = {op.id for b in blocks for op in g.blocks[b].ops}
    live_in: set[int] = set()
    for b in order:
        for op in g.blocks[b].ops:
            if op.kind == "phi":
                if b == entry and not whole:
                    live_in.add(op.id)
                for o, p in zip(op.operands, op.preds):
                    if p in blocks and isinstance(o, int) and o not in defined:
                        live_in.add(o)
            elif op.kind == "param":
                live_in.add(op.id)
            else:
                live_in.update(o for o in op.operands if isinstance(o, int) and o not in defined)
    live_out: set[int] = set()
    exits = []
    for bid, blk in g.blocks.items():
        if bid in blocks:
            exits.extend((bid, s) for s in dict.fromkeys(blk.succs) if s not in blocks)
            continue
        for op in blk.ops:
            if op.kind == "phi":
                live_out.update(o for o, p in zip(op.operands, op.preds)
                                if p in blocks and isinstance(o, int) and o in defined)
            else:
                live_out.update(o for o in op.operands if isinstance(o, int) and o in defined)
    ops = {b: [copy.deepcopy(op) for op in g.blocks[b].ops if op.kind != "param"] for b in order}
    mem = [(a, b) for a, b in g.mem_edges if a in defined and b in defined]
    return HwRegion(rid, g.entry_addr, entry, order, ops, {b: list(g.blocks[b].succs) for b in order},
                    sorted(live_in), sorted(live_out), sorted(exits), whole, g.returns if whole else (), mem)


# -- reference behaviour -------------------------------------------------------

@dataclass
class RegionRun:
    """What a region run hands back to software."""
    values: dict[int, int]          # live-out node id -> value
    exit: tuple[int, int] | None    # edge taken out of a loop region
    returned: dict[int, int] | None  # register -> value for whole procedures
    cycles: int = 0


def execute_region(program: CdfgProgram, hw: HwRegion, inputs: dict[int, int],
                   memory: dict | None = None, max_steps: int = 1_000_000) -> RegionRun:
    """Run the region's blocks in the CDFG executor (the oracle for the RTL simulator).

    ``memory`` is updated in place when given.
    """
    g = program.procedures[hw.proc]
    m = CdfgMachine(program, (), {} if memory is None else memory, max_steps)
    if memory is not None:
        m.mem = memory
    vals = {k: v & MASK32 for k, v in inputs.items()}
    res = m.run_blocks(g, vals, hw.entry, None, region=None if hw.whole_procedure else frozenset(hw.blocks))
    if res[0] == "return":
        return RegionRun({}, None, res[1], m.steps)
    return RegionRun({v: vals[v] for v in hw.live_outs if v in vals}, (res[1], res[2]), None, m.steps)


def operand_value(o, regs: dict) -> int:
    return o.value & MASK32 if isinstance(o, Imm) else regs[o]


def cut_single(op: IrOp) -> HwRegion:
    """A one-block region holding just ``op`` (its operands become live-ins)."""
    n = copy.deepcopy(op)
    n.block = 0
    ins = sorted(o for o in n.operands if isinstance(o, int))
    return HwRegion(f"node{op.id}", 0, 0, [0], {0: [n]}, {0: []}, ins, [n.id], [], False)
