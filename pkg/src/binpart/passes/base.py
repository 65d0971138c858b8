"""Shared bookkeeping for CDFG passes: reports, use replacement, dead-code removal."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable, Iterator

from ..decompiler.cdfg import Cdfg, CdfgProgram
from ..decompiler.ir import EFFECTS, Imm, IrOp


@dataclass
class PassStats:
    name: str
    nodes_before: int = 0
    nodes_after: int = 0
    rewrites: list[tuple[int, str]] = field(default_factory=list)
    iterations: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)   # (site, reason)


@dataclass
class PassReport:
    stages: list[PassStats] = field(default_factory=list)

    def dump(self) -> str:
        lines = []
        for st in self.stages:
            lines.extend(f"rewrite {st.name} {site} {rule}" for site, rule in st.rewrites)
        return "\n".join(lines) + ("\n" if lines else "")

    def summary(self) -> str:
        rows = [f"{'pass':<22}{'before':>8}{'after':>8}{'rewrites':>10}{'iters':>7}"]
        for st in self.stages:
            rows.append(f"{st.name:<22}{st.nodes_before:>8}{st.nodes_after:>8}"
                        f"{len(st.rewrites):>10}{st.iterations:>7}")
        return "\n".join(rows) + "\n"

    def find(self, name: str) -> list[PassStats]:
        return [s for s in self.stages if s.name == name]


Graphs = Cdfg | CdfgProgram


def graphs_of(g: Graphs) -> list[Cdfg]:
    return [g.procedures[a] for a in sorted(g.procedures)] if isinstance(g, CdfgProgram) else [g]


def apply_pass(name: str, g: Graphs, fn: Callable[[Cdfg, PassStats, Iterator[int]], None],
               stats: PassStats | None = None) -> tuple[Graphs, PassStats]:
    """Run ``fn`` on a deep copy of every procedure graph and refresh derived data."""
    out = g.copy() if isinstance(g, CdfgProgram) else copy.deepcopy(g)
    st = stats or PassStats(name)
    st.nodes_before = sum(h.node_count() for h in graphs_of(out))
    ids = fresh_ids(out)
    for h in graphs_of(out):
        fn(h, st, ids)
        h.refresh()
    st.nodes_after = sum(h.node_count() for h in graphs_of(out))
    return out, st


def replace_uses(g: Cdfg, old: int, new) -> int:
    """Point every use of node ``old`` at ``new`` (a node id or an Imm)."""
    n = 0
    for b in g.blocks.values():
        for op in b.ops:
            for i, o in enumerate(op.operands):
                if o == old and isinstance(o, int):
                    op.operands[i] = new
                    n += 1
    return n


def use_counts(g: Cdfg) -> dict[int, int]:
    counts: dict[int, int] = {}
    for op in g.ops():
        for o in op.operands:
            if isinstance(o, int):
                counts[o] = counts.get(o, 0) + 1
    return counts


def remove_dead(g: Cdfg, st: PassStats | None = None) -> bool:
    """Delete value nodes nobody uses (iteratively, so whole dead chains go)."""
    changed_any = False
    while True:
        counts: dict[int, int] = {}
        for op in g.ops():
            for o in op.operands:
                if isinstance(o, int) and o != op.id:    # a phi feeding only itself is dead
                    counts[o] = counts.get(o, 0) + 1
        dead = {op.id for op in g.ops()
                if op.kind not in EFFECTS and op.kind != "proj" and not counts.get(op.id)}
        if not dead:
            return changed_any
        for b in g.blocks.values():
            if st is not None:
                st.rewrites.extend((op.id, "dce") for op in b.ops if op.id in dead)
            b.ops = [op for op in b.ops if op.id not in dead]
        changed_any = True


def value_of(o, nodes: dict[int, IrOp]) -> int | None:
    """Constant value of an operand, if it is one."""
    if isinstance(o, Imm):
        return o.value & 0xFFFFFFFF
    op = nodes.get(o)
    if op is not None and op.kind == "const":
        return op.value & 0xFFFFFFFF
    return None


def fresh_ids(g: Graphs):
    from ..decompiler.cdfg import next_id

    n = next_id(g)
    while True:
        yield n
        n += 1
