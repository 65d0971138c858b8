"""Leader analysis, procedure discovery and control-flow graph construction."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

from ..errors import DecompileError, IndirectJump
from ..isa import BRANCHES, Instruction, ProgramImage, decode
from .ir import IrOp
from .parse import SYS_EXIT, static_targets, syscall_service


class Graph(NamedTuple):
    """Minimal directed graph view used by the dominance and structure code."""
    entry: int
    succs: dict[int, list[int]]

    def preds(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n: [] for n in self.succs}
        for n, ss in self.succs.items():
            for s in ss:
                out.setdefault(s, []).append(n)
        return out


class Edge(NamedTuple):
    src: int
    dst: int
    kind: str  # fallthrough | taken | call | return


@dataclass
class CfgBlock:
    id: int
    start: int
    addrs: list[int]
    ops: list[IrOp] = field(default_factory=list)

    @property
    def last_addr(self) -> int:
        return self.addrs[-1]


@dataclass
class Procedure:
    entry_addr: int
    entry_block: int
    blocks: list[int]
    name: str
    error: IndirectJump | None = None


@dataclass
class Cfg:
    blocks: dict[int, CfgBlock]
    edges: list[Edge]
    entry: int
    procedures: dict[int, Procedure]
    by_addr: dict[int, int] = field(default_factory=dict)

    def successors(self, block: int, intra: bool = True) -> list[int]:
        kinds = ("taken", "fallthrough") if intra else ("taken", "fallthrough", "call", "return")
        return [e.dst for e in self.edges if e.src == block and e.kind in kinds]

    def graph(self, proc: int | None = None) -> Graph:
        """Intraprocedural graph of one procedure (the entry procedure by default)."""
        p = self.procedures[self.blocks[self.entry].start if proc is None else proc]
        members = set(p.blocks)
        succs: dict[int, list[int]] = {b: [] for b in p.blocks}
        for e in self.edges:
            if e.src in members and e.kind in ("taken", "fallthrough") and e.dst not in succs[e.src]:
                succs[e.src].append(e.dst)
        return Graph(p.entry_block, succs)


def _classify(inst: Instruction, insts, targets) -> str:
    """Control behaviour of one instruction: none|branch|jump|call|return|indirect|halt."""
    m = inst.mnemonic
    if m in BRANCHES:
        return "branch"
    if m == "J":
        return "jump"
    if m == "JAL":
        return "call"
    if m == "JR":
        return "return" if inst.rs == 31 else "indirect"
    if m == "SYSCALL" and syscall_service(insts, inst.address, targets) == SYS_EXIT:
        return "halt"
    return "none"


def _decode_text(image: ProgramImage) -> dict[int, Instruction]:
    return {image.text_base + 4 * i: decode(w, image.text_base + 4 * i) for i, w in enumerate(image.text)}


def _explore(image: ProgramImage, insts):
    """Reachable instructions, leaders and procedure entries."""
    targets = static_targets(insts)
    leaders = {image.entry}
    proc_entries = [image.entry]
    seen: set[int] = set()
    work = [image.entry]
    kinds: dict[int, str] = {}
    while work:
        addr = work.pop()
        while addr not in seen:
            if addr not in insts:
                raise DecompileError(f"control reaches 0x{addr:08x} outside the text section")
            seen.add(addr)
            inst = insts[addr]
            kind = kinds[addr] = _classify(inst, insts, targets)
            nxt = addr + 4
            if kind == "none":
                addr = nxt
                continue
            if kind in ("branch", "jump", "call"):
                t = inst.branch_target()
                leaders.add(t)
                work.append(t)
                if kind == "call" and t not in proc_entries:
                    proc_entries.append(t)
            if kind in ("branch", "call"):
                leaders.add(nxt)
                work.append(nxt)
            elif nxt in insts:
                leaders.add(nxt)
            break
    return seen, leaders & seen, proc_entries, kinds


def find_leaders(image: ProgramImage) -> set[int]:
    """Block start addresses of the reachable code."""
    _, leaders, _, _ = _explore(image, _decode_text(image))
    return leaders


def build_cfg(ir: list[IrOp], image: ProgramImage, strict: bool = True) -> Cfg:
    """Group parsed IR into basic blocks and connect them.

    With ``strict`` the first indirect jump raises; otherwise the owning
    procedures are marked failed and the rest of the program is kept.
    """
    insts = _decode_text(image)
    reachable, leaders, proc_entries, kinds = _explore(image, insts)
    by_origin: dict[int, list[IrOp]] = defaultdict(list)
    for op in ir:
        by_origin[op.origin].append(op)

    blocks: dict[int, CfgBlock] = {}
    by_addr: dict[int, int] = {}
    for start in sorted(leaders):
        addrs = [start]
        addr = start
        while kinds[addr] == "none" and addr + 4 in reachable and addr + 4 not in leaders:
            addr += 4
            addrs.append(addr)
        bid = len(blocks)
        blocks[bid] = CfgBlock(bid, start, addrs, [op for a in addrs for op in by_origin[a]])
        by_addr[start] = bid

    edges: list[Edge] = []
    returns: dict[int, list[int]] = defaultdict(list)   # callee -> return-point blocks
    for b in blocks.values():
        last = b.last_addr
        kind = kinds[last]
        inst = insts[last]
        nxt = last + 4
        if kind == "none":
            if nxt not in by_addr:
                raise DecompileError(f"execution falls off the text section after 0x{last:08x}")
            edges.append(Edge(b.id, by_addr[nxt], "fallthrough"))
        elif kind == "branch":
            t = by_addr[inst.branch_target()]
            edges.append(Edge(b.id, t, "taken"))
            if by_addr[nxt] != t:
                edges.append(Edge(b.id, by_addr[nxt], "fallthrough"))
        elif kind == "jump":
            edges.append(Edge(b.id, by_addr[inst.branch_target()], "taken"))
        elif kind == "call":
            edges.append(Edge(b.id, by_addr[inst.branch_target()], "call"))
            edges.append(Edge(b.id, by_addr[nxt], "fallthrough"))
            returns[inst.branch_target()].append(by_addr[nxt])

    procedures: dict[int, Procedure] = {}
    for entry in proc_entries:
        eb = by_addr[entry]
        members, stack = [], [eb]
        seen = {eb}
        while stack:
            n = stack.pop()
            members.append(n)
            for e in edges:
                if e.src == n and e.kind in ("taken", "fallthrough") and e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        members.sort()
        name = image.symbol_at(entry) or f"proc_{entry:08x}"
        proc = Procedure(entry, eb, members, name)
        for m in members:
            last = blocks[m].last_addr
            if kinds[last] == "indirect" and proc.error is None:
                proc.error = IndirectJump(last, entry)
            if kinds[last] == "return":
                for rp in returns.get(entry, []):
                    edges.append(Edge(m, rp, "return"))
        if proc.error is not None and strict:
            raise proc.error
        procedures[entry] = proc

    return Cfg(blocks, edges, by_addr[image.entry], procedures, by_addr)
