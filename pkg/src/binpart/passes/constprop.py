"""Constant propagation, algebraic identities and copy elimination, to a fixpoint.

This strips the instruction-set overhead a binary carries, such as moves
encoded as ``add rd, rs, $0`` or addresses assembled from ``lui``/``ori``.
"""

from __future__ import annotations

from ..decompiler.cdfg import Cdfg
from ..decompiler.ir import BINARY, MASK32, Imm, evaluate
from .base import Graphs, PassStats, apply_pass, remove_dead, replace_uses, value_of

NEG1 = MASK32


def _set_const(op, value):
    op.kind, op.operands, op.value = "const", [], value & MASK32


def _set_copy(op, src):
    op.kind, op.operands = "copy", [src]


def _identity(op, nodes) -> str | None:
    """Rewrite ``op`` in place by one algebraic rule; return the rule name."""
    k = op.kind
    if k not in BINARY:
        return None
    a, b = op.operands
    va, vb = value_of(a, nodes), value_of(b, nodes)
    if va is not None and vb is not None:
        _set_const(op, evaluate(k, va, vb))
        return "fold"
    same = a == b and not isinstance(a, Imm)
    if k in ("add", "or", "xor") and vb == 0:
        _set_copy(op, a)
        return f"{k}-zero"
    if k in ("add", "or", "xor") and va == 0:
        _set_copy(op, b)
        return f"{k}-zero"
    if k == "sub" and vb == 0:
        _set_copy(op, a)
        return "sub-zero"
    if k == "and" and (vb == NEG1 or va == NEG1):
        _set_copy(op, a if vb == NEG1 else b)
        return "and-ones"
    if k in ("and", "mul") and (va == 0 or vb == 0):
        _set_const(op, 0)
        return f"{k}-zero"
    if k == "mul" and (va == 1 or vb == 1):
        _set_copy(op, a if vb == 1 else b)
        return "mul-one"
    if k in ("shl", "lshr", "ashr"):
        if vb is not None and vb & 31 == 0:
            _set_copy(op, a)
            return "shift-zero"
        if va == 0 or (k == "ashr" and va == NEG1):
            _set_const(op, va)
            return "shift-of-const"
    if same:
        if k in ("sub", "xor", "slt", "sltu", "ne"):
            _set_const(op, 0)
            return f"{k}-self"
        if k == "eq":
            _set_const(op, 1)
            return "eq-self"
        if k in ("and", "or"):
            _set_copy(op, a)
            return f"{k}-self"
    # fold constants into immediates so later passes see one canonical form
    if va is not None and not isinstance(a, Imm):
        op.operands[0] = Imm(va)
        return "imm"
    if vb is not None and not isinstance(b, Imm):
        op.operands[1] = Imm(vb)
        return "imm"
    if k == "sub" and vb is not None:
        op.kind, op.operands = "add", [a, Imm((-vb) & MASK32)]
        return "sub-const"
    if k in ("add", "or", "xor", "and", "mul") and isinstance(a, Imm) and not isinstance(b, Imm):
        op.operands = [b, a]
        return "commute"
    if k == "add" and vb is not None and isinstance(a, int):
        inner = nodes.get(a)
        if inner is not None and inner.kind == "add" and isinstance(inner.operands[1], Imm) \
                and isinstance(inner.operands[0], int):
            op.operands = [inner.operands[0], Imm((inner.operands[1].value + vb) & MASK32)]
            return "reassoc"
    return None


def _sweep(g: Cdfg, st: PassStats) -> bool:
    changed = False
    nodes = g.nodes()
    for bid in sorted(g.blocks):
        for op in g.blocks[bid].ops:
            rule = _identity(op, nodes)
            if rule:
                st.rewrites.append((op.id, rule))
                changed = True
    # copies and trivial phis disappear into their uses
    for bid in sorted(g.blocks):
        blk = g.blocks[bid]
        keep = []
        for op in blk.ops:
            src = None
            if op.kind == "copy":
                src = op.operands[0]
                rule = "copy-chase"
            elif op.kind == "phi":
                vals = {o for o in op.operands if o != op.id}
                if len(vals) == 1:
                    src = vals.pop()
                    rule = "phi-trivial"
            if src is not None and src != op.id:
                replace_uses(g, op.id, src)
                st.rewrites.append((op.id, rule))
                changed = True
                continue
            keep.append(op)
        blk.ops = keep
    # constant operands become immediates
    nodes = g.nodes()
    for op in g.ops():
        if op.kind in BINARY:
            continue     # handled by _identity
        for i, o in enumerate(op.operands):
            if isinstance(o, int) and nodes.get(o) is not None and nodes[o].kind == "const":
                op.operands[i] = Imm(nodes[o].value)
                st.rewrites.append((op.id, "imm"))
                changed = True
    changed |= _fold_branches(g, st)
    changed |= remove_dead(g, st)
    return changed


def _fold_branches(g: Cdfg, st: PassStats) -> bool:
    changed = False
    for bid in sorted(g.blocks):
        blk = g.blocks[bid]
        t = blk.terminator
        if t is None or t.kind != "branch_cond" or not isinstance(t.operands[0], Imm):
            continue
        taken = (t.operands[0].value != 0) != t.negate
        keep, drop = (blk.succs[0], blk.succs[1]) if taken else (blk.succs[1], blk.succs[0])
        blk.ops.pop()
        blk.succs = [keep]
        if drop != keep:
            _drop_pred(g.blocks[drop], bid)
        st.rewrites.append((t.id, "branch-fold"))
        changed = True
    if changed:
        _remove_unreachable(g)
    return changed


def _drop_pred(blk, pred):
    for phi in blk.phis:
        i = phi.preds.index(pred)
        del phi.preds[i]
        del phi.operands[i]


def _remove_unreachable(g: Cdfg):
    seen, stack = {g.entry}, [g.entry]
    while stack:
        for s in g.blocks[stack.pop()].succs:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    for bid in sorted(set(g.blocks) - seen):
        for s in dict.fromkeys(g.blocks[bid].succs):
            if s in seen:
                _drop_pred(g.blocks[s], bid)
        del g.blocks[bid]


def _constprop(g: Cdfg, st: PassStats, ids=None) -> None:
    for _ in range(1000):
        st.iterations += 1
        if not _sweep(g, st):
            return


def propagate_constants(g: Graphs, stats: PassStats | None = None):
    """Return ``(graph, stats)`` with constants folded and copies removed."""
    return apply_pass("propagate_constants", g, _constprop, stats)
