"""Stack operation removal: promote non-escaping stack slots to SSA values.

Addresses are tracked as constant offsets from the procedure's incoming
stack pointer.  A slot is promoted when every access to it uses the same
word size, no stack-derived address leaks anywhere but an address operand,
a nested stack adjustment, the returned stack pointer or the stack pointer
handed to a callee that itself keeps below it, and the slot is written
before it is read on every path.
"""

from __future__ import annotations

from ..decompiler.cdfg import SP, Cdfg, CdfgProgram
from ..decompiler.dominators import compute_dominators
from ..decompiler.ir import MASK32, Imm, IrOp
from .base import Graphs, PassStats, apply_pass, graphs_of, replace_uses


def _signed(v):
    v &= MASK32
    return v - (1 << 32) if v >> 31 else v


def stack_offsets(g: Cdfg) -> tuple[dict[int, int], set[int]]:
    """Offsets (from entry sp) of stack-derived values, and the escaping ones."""
    off: dict[int, int] = {}
    if SP in g.params:
        off[g.params[SP]] = 0
    changed = True
    while changed:
        changed = False
        for op in g.ops():
            if op.id in off:
                continue
            if op.kind == "add" and isinstance(op.operands[0], int) and op.operands[0] in off \
                    and isinstance(op.operands[1], Imm):
                off[op.id] = off[op.operands[0]] + _signed(op.operands[1].value)
                changed = True
            elif op.kind == "copy" and op.operands[0] in off:
                off[op.id] = off[op.operands[0]]
                changed = True
            elif op.kind == "phi":
                vals = {off.get(o) for o in op.operands if o != op.id}
                if len(vals) == 1 and None not in vals:
                    off[op.id] = vals.pop()
                    changed = True
    escapes: set[int] = set()
    for op in g.ops():
        for i, o in enumerate(op.operands):
            if o not in off or not isinstance(o, int):
                continue
            if op.id in off:
                continue                        # derived pointer, tracked itself
            if op.kind in ("load", "store") and i == 0:
                continue
            if op.kind == "return" and op.anno.get("regs", ())[i] == SP:
                continue
            if op.kind == "call" and op.anno.get("args", ())[i] == SP:
                continue                        # checked against the callee below
            escapes.add(o)
    return off, escapes


def _clean_procs(program: CdfgProgram) -> set[int]:
    """Procedures that touch the stack only below their incoming sp (and call only such)."""
    clean = set(program.procedures)
    changed = True
    while changed:
        changed = False
        for a in sorted(clean):
            g = program.procedures[a]
            off, esc = stack_offsets(g)
            ok = not esc
            for op in g.ops():
                if op.kind in ("load", "store") and op.operands[0] in off:
                    if off[op.operands[0]] + (op.size or 4) > 0:
                        ok = False
                if op.kind == "call" and op.callee not in clean:
                    ok = False
            if not ok:
                clean.discard(a)
                changed = True
    return clean


def _slot_accesses(g: Cdfg, off, escapes, clean):
    """Map slot offset -> list of accessing ops, plus offsets that cannot be promoted."""
    slots: dict[int, list[IrOp]] = {}
    bad: set[int] = set()
    unsafe_below = None          # calls may clobber everything below this offset
    for op in g.ops():
        if op.kind in ("load", "store") and op.operands[0] in off:
            o = off[op.operands[0]]
            slots.setdefault(o, []).append(op)
            if op.size != 4 or o % 4:
                bad.add(o)
        elif op.kind == "call":
            args = dict(zip(op.anno.get("args", ()), op.operands))
            if clean is None or op.callee not in clean:
                unsafe_below = float("inf")
            elif SP in args:
                sp = args[SP]
                q = off.get(sp) if isinstance(sp, int) else None
                if q is None:
                    unsafe_below = float("inf")
                else:
                    unsafe_below = max(unsafe_below if unsafe_below is not None else q, q)
    if escapes:
        return slots, set(slots)
    for o in slots:
        if unsafe_below is not None and o < unsafe_below:
            bad.add(o)
    # overlapping accesses of different slots
    keys = sorted(slots)
    for a, b in zip(keys, keys[1:]):
        if b < a + 4:
            bad.update((a, b))
    return slots, bad


def _promote_slot(g: Cdfg, o: int, accesses: list[IrOp], dom, df, ids, st: PassStats) -> bool:
    acc_ids = {op.id for op in accesses}
    stores = {op.block for op in accesses if op.kind == "store"}
    # slot liveness: a load is a use, a store a def
    use, defs = {}, {}
    for bid, blk in g.blocks.items():
        u = d = False
        for op in blk.ops:
            if op.id in acc_ids:
                if op.kind == "load" and not d:
                    u = True
                if op.kind == "store":
                    d = True
        use[bid], defs[bid] = u, d
    live_in = {b: False for b in g.blocks}
    changed = True
    while changed:
        changed = False
        for b in g.blocks:
            out = any(live_in[s] for s in g.blocks[b].succs)
            new = use[b] or (out and not defs[b])
            if new != live_in[b]:
                live_in[b] = new
                changed = True
    if live_in[g.entry]:
        st.rejected.append((accesses[0].id, f"slot {o} read before written"))
        return False
    phis: dict[int, IrOp] = {}
    work, placed = list(stores), set()
    while work:
        n = work.pop()
        for f in df.get(n, ()):
            if f not in placed:
                placed.add(f)
                work.append(f)
                if live_in[f]:
                    phi = IrOp(next(ids), "phi", [], origin=g.blocks[f].start, preds=[], block=f)
                    phis[f] = phi
                    g.blocks[f].ops.insert(0, phi)
    replaced: dict[int, object] = {}
    undefined = Imm(0)      # never read: the slot is dead on such paths

    def rename(b, cur):
        if b in phis:
            cur = phis[b].id
        keep = []
        for op in g.blocks[b].ops:
            if op.id in acc_ids:
                if op.kind == "store":
                    cur = op.operands[1]
                else:
                    replaced[op.id] = cur
                st.rewrites.append((op.id, "stack-slot"))
                continue
            keep.append(op)
        g.blocks[b].ops = keep
        for s in dict.fromkeys(g.blocks[b].succs):
            if s in phis:
                phis[s].operands.append(cur)
                phis[s].preds.append(b)
        for c in dom.children.get(b, []):
            rename(c, cur)

    rename(g.entry, undefined)

    def resolve(v):
        while isinstance(v, int) and v in replaced:
            v = replaced[v]
        return v

    for lid in list(replaced):
        replace_uses(g, lid, resolve(lid))
    return True


def _remove(g: Cdfg, st: PassStats, ids, clean=None) -> None:
    off, escapes = stack_offsets(g)
    slots, bad = _slot_accesses(g, off, escapes, clean)
    for o in sorted(set(slots) & bad):
        st.rejected.append((slots[o][0].id, f"slot {o} escapes or overlaps"))
    todo = [o for o in sorted(slots) if o not in bad]
    if not todo:
        return
    dom = compute_dominators(g.graph())
    df = dom.frontier(g.graph())
    for o in todo:
        _promote_slot(g, o, slots[o], dom, df, ids, st)


def remove_stack_ops(g: Graphs, stats: PassStats | None = None):
    """Return ``(graph, stats)`` with non-escaping stack slots turned into values.

    Run :func:`propagate_constants` afterwards to delete the now-unused
    address arithmetic and stack-pointer adjustments.
    """
    clean = _clean_procs(g) if isinstance(g, CdfgProgram) else None
    return apply_pass("remove_stack_ops", g, lambda h, st, ids: _remove(h, st, ids, clean), stats)


__all__ = ["remove_stack_ops", "stack_offsets", "graphs_of"]
