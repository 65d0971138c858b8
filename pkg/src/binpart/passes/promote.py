"""Strength promotion: turn shift/add/sub trees computing ``x*c`` back into a multiply.

The replaced tree is kept on the new ``mul`` node (``anno["promoted"]``) so
synthesis can still pick the shift/add form when multipliers are scarce.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..decompiler.cdfg import Cdfg
from ..decompiler.ir import MASK32, Imm, IrOp
from .base import Graphs, PassStats, apply_pass, remove_dead, use_counts


@dataclass(frozen=True)
class ShiftAdd:
    """Expression over one variable ``x``: x | 0 | (shl e s) | (add e e) | (sub e e)."""
    kind: str                  # x | zero | shl | add | sub
    a: "ShiftAdd | None" = None
    b: "ShiftAdd | None" = None
    shift: int = 0

    def evaluate(self, x: int) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "x":
            return x & MASK32
        if self.kind == "shl":
            return (self.a.evaluate(x) << self.shift) & MASK32
        l, r = self.a.evaluate(x), self.b.evaluate(x)
        return (l + r) & MASK32 if self.kind == "add" else (l - r) & MASK32

    def coefficient(self) -> int:
        if self.kind == "zero":
            return 0
        if self.kind == "x":
            return 1
        if self.kind == "shl":
            return self.a.coefficient() << self.shift
        l, r = self.a.coefficient(), self.b.coefficient()
        return l + r if self.kind == "add" else l - r

    def op_count(self) -> int:
        if self.kind in ("x", "zero"):
            return 0
        return 1 + self.a.op_count() + (self.b.op_count() if self.b else 0)

    def counts(self) -> dict[str, int]:
        """Operations by unit class: ``shl`` -> shifter, ``add``/``sub`` -> adder."""
        out = {"shl": 0, "add": 0}
        stack = [self]
        while stack:
            e = stack.pop()
            if e.kind == "shl":
                out["shl"] += 1
            elif e.kind in ("add", "sub"):
                out["add"] += 1
            stack.extend(c for c in (e.a, e.b) if c is not None)
        return out

    def describe(self) -> str:
        if self.kind in ("x", "zero"):
            return "x" if self.kind == "x" else "0"
        if self.kind == "shl":
            return f"(shl {self.a.describe()} {self.shift})"
        return f"({self.kind} {self.a.describe()} {self.b.describe()})"


X = ShiftAdd("x")
ZERO = ShiftAdd("zero")


def csd_digits(c: int) -> list[tuple[int, int]]:
    """Canonical signed-digit recoding of ``c`` (mod 2**32) as (sign, shift) pairs, low bits first."""
    out, k = [], 0
    c &= MASK32
    while c:
        if c & 1:
            d = 2 - (c & 3)          # +1 or -1
            out.append((d, k))
            c -= d
        c >>= 1
        k += 1
    return [(d, k) for d, k in out if k < 32]   # x << 32 vanishes modulo 2**32


def csd_expand(c: int) -> ShiftAdd:
    """Shift/add/sub tree computing ``x*c`` with the fewest nonzero digits."""
    digits = csd_digits(c)
    if not digits:
        raise ValueError("cannot expand a multiply by zero")
    terms = [(s, X if k == 0 else ShiftAdd("shl", X, shift=k)) for s, k in reversed(digits)]
    pos = [i for i, (s, _) in enumerate(terms) if s > 0]
    if pos:
        sign, acc = terms.pop(pos[0])
    else:
        acc = ZERO
    for s, t in terms:
        acc = ShiftAdd("add" if s > 0 else "sub", acc, t)
    return acc


def _tree(op: IrOp, nodes, counts, block, limit):
    """(base, ShiftAdd, member ids) for the maximal single-use tree rooted at ``op``."""
    members = []

    def walk(v, root=False):
        n = nodes.get(v) if isinstance(v, int) else None
        inner = (n is not None and n.block == block and (root or counts.get(v, 0) == 1)
                 and (n.kind in ("add", "sub") and all(isinstance(o, int) for o in n.operands)
                      or n.kind == "shl" and isinstance(n.operands[1], Imm) and isinstance(n.operands[0], int)))
        if not inner or len(members) >= limit:
            return v, X
        members.append(v)
        if n.kind == "shl":
            base, e = walk(n.operands[0])
            return base, ShiftAdd("shl", e, shift=n.operands[1].value & 31)
        ba, ea = walk(n.operands[0])
        bb, eb = walk(n.operands[1])
        if ba != bb:
            return None, None
        return ba, ShiftAdd(n.kind, ea, eb)

    base, expr = walk(op.id, root=True)
    if base is None:
        return None
    return base, expr, members


def _promote(g: Cdfg, st: PassStats, ids, limit: int = 8) -> None:
    nodes = g.nodes()
    counts = use_counts(g)
    absorbed: set[int] = set()
    for bid in sorted(g.blocks):
        for op in reversed(g.blocks[bid].ops):
            if op.id in absorbed or op.kind not in ("add", "sub", "shl"):
                continue
            found = _tree(op, nodes, counts, bid, limit)
            if found is None:
                continue
            base, expr, members = found
            if len(members) < 2 or base == op.id:
                continue
            c = expr.coefficient() & MASK32
            if c in (0, 1):
                continue
            absorbed.update(members)
            op.kind, op.operands = "mul", [base, Imm(c)]
            op.anno["promoted"] = expr
            st.rewrites.append((op.id, f"promote-mul-{c}"))
    remove_dead(g)


def promote_strength(g: Graphs, stats: PassStats | None = None, max_chain: int = 8):
    """Return ``(graph, stats)`` with shift/add trees replaced by annotated multiplies."""
    return apply_pass("promote_strength", g, lambda h, st, ids: _promote(h, st, ids, max_chain), stats)
