"""Candidate hardware regions: recovered loops and the procedure bodies around them."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from ..decompiler.cdfg import SP, Cdfg, CdfgProgram, address_key
from ..decompiler.ir import ARITH, COMPARES, LOGIC, MASK32, NON_SYNTH, SHIFTS, Imm, IrOp
from ..isa import ProgramImage
from ..simulator import Profile
from .area import DEFAULT_TABLE, GateTable, estimate_area

TOP = "⊤"
ALU = ARITH | LOGIC | SHIFTS | COMPARES
# bookkeeping nodes that are neither computation nor memory traffic
_NOT_COUNTED = frozenset({"phi", "param", "proj", "const", "branch_cond", "jump", "return"})


@dataclass(frozen=True, order=True)
class AddrRange:
    """Accesses starting at offsets ``lo..hi`` of ``symbol``, each ``span`` bytes wide."""
    symbol: str
    lo: int = 0
    hi: int = MASK32
    span: int = 4

    def intersects(self, other: "AddrRange") -> bool:
        if self.symbol == TOP or other.symbol == TOP:
            return True
        if self.symbol != other.symbol:
            return False
        return self.lo <= other.hi + other.span - 1 and other.lo <= self.hi + self.span - 1

    def __str__(self):
        if self.symbol == TOP:
            return TOP
        return f"({self.symbol},[{self.lo},{self.hi}])"


TOP_RANGE = AddrRange(TOP)


@dataclass
class Region:
    id: str
    kind: str                      # Loop | ProcedureBody | Block
    blocks: frozenset
    cycles: int = 0
    est_area: int = 0
    addr_set: frozenset = frozenset()
    suitability: float = 1.0
    proc: int = 0                  # entry address of the owning procedure
    header: int | None = None      # entry block (loop header / procedure entry)
    address: int = 0               # lowest instruction address, for tie breaking
    invocations: int = 0           # entries from outside, from the profile
    whole_procedure: bool = False
    notes: list[str] = field(default_factory=list)

    def overlaps(self, other: "Region") -> bool:
        return self.proc == other.proc and bool(self.blocks & other.blocks)


# -- memory footprints ---------------------------------------------------------

class _Symbols:
    def __init__(self, image: ProgramImage | None):
        self.entries: list[tuple[int, str, int]] = []   # (start, name, end)
        if image is None or not image.data:
            return
        lo, hi = image.data_base, image.data_base + len(image.data)
        inside = sorted((a, n) for n, a in image.symbols.items() if lo <= a < hi)
        if not inside or inside[0][0] != lo:
            inside.insert(0, (lo, ".data"))
        for i, (a, n) in enumerate(inside):
            end = inside[i + 1][0] if i + 1 < len(inside) else hi
            self.entries.append((a, n, end))
        self._starts = [e[0] for e in self.entries]

    def find(self, addr: int):
        if not self.entries:
            return None
        i = bisect_right(self._starts, addr) - 1
        if i < 0:
            return None
        a, n, end = self.entries[i]
        return (a, n, end) if addr < end else None


def _trace(v, nodes, data, seen=frozenset()):
    """Classify an address value: ('const', a) | ('sym', a) | ('stack',) | ('top',).

    ``('sym', a)`` means "somewhere in the object containing ``a``"; ``data``
    tells whether a constant looks like a data address.
    """
    if isinstance(v, Imm):
        return ("const", v.value & MASK32)
    if v in seen:
        return ("loop",)                 # around a cycle back to a phi being traced
    op = nodes.get(v)
    if op is None:
        return ("top",)
    seen = seen | {v}
    k = op.kind
    if k == "const":
        return ("const", op.value & MASK32)
    if k == "copy":
        return _trace(op.operands[0], nodes, data, seen)
    if k == "param" and op.reg == SP:
        return ("stack",)
    if k in ("add", "sub"):
        a, b = op.operands
        ra = _trace(a, nodes, data, seen)
        rb = _trace(b, nodes, data, seen) if k == "add" else ("top",)
        if ra[0] == "const" and isinstance(b, Imm):
            sign = 1 if k == "add" else -1
            return ("const", (ra[1] + sign * b.value) & MASK32)
        for r in (ra, rb):
            if r[0] in ("stack", "sym"):
                return r
        # base + index: whichever side is a data address names the object
        for r in (ra, rb):
            if r[0] == "const" and data(r[1]):
                return ("sym", r[1])
        if ra[0] == "loop":
            return ra
        return ("top",)
    if k == "phi":
        roots = {_trace(o, nodes, data, seen) for o in op.operands}
        roots.discard(("loop",))
        kinds = {r[0] for r in roots}
        if kinds == {"stack"}:
            return ("stack",)
        if kinds and kinds <= {"const", "sym"}:
            return ("sym", min(r[1] for r in roots))
        return ("top",)
    return ("top",)


def _induction_range(g: Cdfg, op: IrOp, nodes) -> tuple[int, int] | None:
    """Start-address range of an access through a counted pointer, when it is exact."""
    base, off = address_key(op, nodes)
    phi = nodes.get(base) if isinstance(base, int) else None
    if phi is None or phi.kind != "phi" or g.structure is None:
        return None
    for loop in g.structure.loops():
        if loop.header != phi.block:
            continue
        for ind in loop.inductions:
            if ind.var != phi.id or ind.init is None or not ind.step or ind.bound is None:
                continue
            kind, other = ind.bound
            end = other.value if isinstance(other, Imm) else None
            if end is None and isinstance(other, int) and nodes.get(other) is not None \
                    and nodes[other].kind == "const":
                end = nodes[other].value
            if kind != "ne" or end is None:
                continue
            span = (end - ind.init) & MASK32
            if span % abs(ind.step) or span == 0:
                continue
            trips = span // abs(ind.step)
            first = ind.init + off
            last = ind.init + ind.step * (trips - 1) + off
            return (min(first, last) & MASK32, max(first, last) & MASK32)
    return None


def footprint(g: Cdfg, ops, image: ProgramImage | None) -> frozenset:
    """Per-symbol hulls of the memory touched by ``ops``."""
    syms = _Symbols(image)
    nodes = g.nodes()
    hull: dict[str, list[int]] = {}
    spans: dict[str, int] = {}
    top = False
    for op in ops:
        if op.kind not in ("load", "store"):
            continue
        size = op.size or 4
        base, off = address_key(op, nodes)
        root = ("const", off) if base == "abs" else _trace(op.operands[0], nodes, lambda a: syms.find(a) is not None)
        if root[0] == "stack":
            lo, hi, name = 0, MASK32, "stack"
        elif root[0] in ("const", "sym") and syms.find(root[1]) is not None:
            start, name, end = syms.find(root[1])
            exact = _induction_range(g, op, nodes) if root[0] == "sym" else None
            if root[0] == "const":
                lo = hi = root[1] - start
            elif exact is not None and syms.find(exact[0]) == syms.find(exact[1]) == (start, name, end):
                lo, hi = exact[0] - start, exact[1] - start
            else:
                lo, hi = 0, max(0, end - start - size)
        else:
            top = True
            continue
        h = hull.setdefault(name, [lo, hi])
        h[0], h[1] = min(h[0], lo), max(h[1], hi)
        spans[name] = max(spans.get(name, 1), size)
    out = {AddrRange(n, lo, hi, spans[n]) for n, (lo, hi) in hull.items()}
    if top:
        out.add(TOP_RANGE)
    return frozenset(out)


# -- suitability ---------------------------------------------------------------

def _region_ops(g: Cdfg, blocks) -> list[IrOp]:
    return [op for b in sorted(blocks) if b in g.blocks for op in g.blocks[b].ops]


def hardware_suitability(region, cdfg: Cdfg) -> float:
    """(ALU op fraction) x (1 structured / 0.5 unstructured) x (0 with calls or I/O)."""
    blocks = getattr(region, "blocks", region)
    ops = _region_ops(cdfg, blocks)
    if any(op.kind in NON_SYNTH for op in ops):
        return 0.0
    if getattr(region, "kind", None) == "ProcedureBody" and not getattr(region, "whole_procedure", True):
        return 0.0       # glue code around loops is not one single-entry piece
    counted = [op for op in ops if op.kind not in _NOT_COUNTED]
    if not counted:
        return 0.0
    frac = sum(op.kind in ALU for op in counted) / len(counted)
    factor = 1.0
    if cdfg.structure is not None and any(r.kind == "Unstructured" and r.blocks & set(blocks)
                                          for r in cdfg.structure.walk()):
        factor = 0.5
    return frac * factor


# -- enumeration ---------------------------------------------------------------

def _addresses(program: CdfgProgram, g: Cdfg, blocks) -> set[int]:
    out: set[int] = set()
    for b in blocks:
        if b in program.block_addrs:
            out.update(program.block_addrs[b])
        elif b in g.blocks:
            out.update(op.origin for op in g.blocks[b].ops)
    return out


def _invocations(program: CdfgProgram, g: Cdfg, blocks, header, profile: Profile) -> int:
    if header is None or header not in program.block_addrs:
        return 0
    inside = {program.block_addrs[b][0] for b in blocks if b in program.block_addrs}
    h = program.block_addrs[header][0]
    n = sum(c for (s, d), c in profile.edge_counts.items() if d == h and s not in inside)
    if n == 0 and header == g.entry and program.entry == g.entry_addr:
        n = profile.block_counts.get(h, 0)        # program entry: reached without an edge
    return n


def enumerate_regions(program: CdfgProgram, profile: Profile,
                      table: GateTable = DEFAULT_TABLE) -> list[Region]:
    """One region per recovered loop (innermost first) and one per procedure body."""
    regions: list[Region] = []
    for entry in sorted(program.procedures):
        g = program.procedures[entry]
        loops = g.structure.loops() if g.structure is not None else []
        in_loops: set[int] = set()
        for lp in loops:
            in_loops |= lp.blocks
            regions.append(_make(program, g, "Loop", lp.blocks, lp.header, profile, table))
        rest = frozenset(g.blocks) - in_loops
        if rest:
            r = _make(program, g, "ProcedureBody", rest, g.entry, profile, table, whole=not loops)
            regions.append(r)
    return regions


def _make(program, g, kind, blocks, header, profile, table, whole=False) -> Region:
    addrs = _addresses(program, g, blocks)
    ops = _region_ops(g, blocks)
    start = min(addrs) if addrs else g.entry_addr
    if kind == "Loop":
        hdr_addr = program.block_addrs.get(header, (start,))[0]
        rid = f"loop_{hdr_addr:08x}"
    else:
        rid = f"proc_{g.entry_addr:08x}"
    r = Region(rid, kind, frozenset(blocks), profile.cycles_in(addrs), estimate_area(blocks, g, table),
               footprint(g, ops, program.image), 0.0, g.entry_addr, header, start,
               whole_procedure=whole)
    r.invocations = _invocations(program, g, blocks, header, profile)
    r.suitability = hardware_suitability(r, g)
    return r
