"""Operator size reduction: forward value bounds meet backward demanded bits.

A node's annotated width ``w`` promises that keeping only its low ``w`` bits
changes nothing observable.  Forward analysis bounds the value itself
(``value < 2**w``); the backward pass bounds how many low bits any user can
ever look at.  The annotation is the smaller of the two.
"""

from __future__ import annotations

from ..decompiler.cdfg import Cdfg
from ..decompiler.ir import COMPARES, Imm, IrOp
from .base import Graphs, PassStats, apply_pass

FULL = 32
NO_VALUE = frozenset({"store", "output", "branch_cond", "jump", "return", "halt", "call"})


def _bits(v: int) -> int:
    return max(1, (v & 0xFFFFFFFF).bit_length())


def _fwd_one(op: IrOp, fw) -> int:
    k = op.kind

    def w(o):
        return _bits(o.value) if isinstance(o, Imm) else fw.get(o, 1)

    def imm(o):
        return o.value & 31 if isinstance(o, Imm) else None

    ops = op.operands
    if k == "const":
        return _bits(op.value)
    if k in COMPARES:
        return 1
    if k in ("copy",):
        return w(ops[0])
    if k == "and":
        return min(w(ops[0]), w(ops[1]))
    if k in ("or", "xor"):
        return max(w(ops[0]), w(ops[1]))
    if k == "add":
        return min(FULL, max(w(ops[0]), w(ops[1])) + 1)
    if k == "mul":
        return min(FULL, w(ops[0]) + w(ops[1]))
    if k == "shl":
        s = imm(ops[1])
        return min(FULL, w(ops[0]) + s) if s is not None else FULL
    if k == "lshr":
        s = imm(ops[1])
        return max(1, w(ops[0]) - s) if s is not None else w(ops[0])
    if k == "ashr":
        if w(ops[0]) < FULL:
            s = imm(ops[1])
            return max(1, w(ops[0]) - s) if s is not None else w(ops[0])
        return FULL
    if k == "load":
        return 8 if op.size == 1 and not op.signed else FULL
    if k == "phi":
        return max(w(o) for o in ops)
    return FULL       # sub, nor, input, param, proj, call results


def forward_widths(g: Cdfg) -> dict[int, int]:
    """Least fixpoint of the forward bound (phis start optimistic and only grow)."""
    fw: dict[int, int] = {}
    order = list(g.ops())
    for _ in range(64):
        changed = False
        for op in order:
            v = _fwd_one(op, fw)
            if v > fw.get(op.id, 0):
                fw[op.id] = v
                changed = True
        if not changed:
            break
    else:  # pragma: no cover - widths only grow and are capped at 32
        raise RuntimeError("width analysis did not converge")
    return fw


def _demand_from(user: IrOp, idx: int, d_user: int) -> int:
    """Low bits of operand ``idx`` that ``user`` needs when ``d_user`` of its result are used."""
    k = user.kind
    ops = user.operands
    if k in ("add", "sub", "mul", "copy", "or", "xor", "nor", "phi"):
        return d_user
    if k == "and":
        other = ops[1 - idx]
        if isinstance(other, Imm):
            return min(d_user, _bits(other.value))
        return d_user
    if k in ("shl", "lshr", "ashr"):
        if idx == 1:
            return 5                     # shift amounts are taken modulo 32
        s = ops[1].value & 31 if isinstance(ops[1], Imm) else None
        if s is None:
            return FULL
        if k == "shl":
            return max(1, d_user - s)
        return min(FULL, d_user + s)
    if k == "store" and idx == 1:
        return 8 if user.size == 1 else FULL
    return FULL                          # compares, addresses, outputs, calls, returns, branches


def demanded_widths(g: Cdfg) -> dict[int, int]:
    """Least fixpoint of demanded low bits, grown backwards from the observable sinks."""
    users: dict[int, list[tuple[IrOp, int]]] = {}
    all_ops = list(g.ops())
    for op in all_ops:
        for i, o in enumerate(op.operands):
            if isinstance(o, int):
                users.setdefault(o, []).append((op, i))
    dm: dict[int, int] = {op.id: 0 for op in all_ops}
    for _ in range(64):
        changed = False
        for op in reversed(all_ops):
            need = 1
            for u, i in users.get(op.id, ()):
                need = max(need, _demand_from(u, i, dm[u.id]))
            if need > dm[op.id]:
                dm[op.id] = need
                changed = True
        if not changed:
            break
    return dm


def _reduce(g: Cdfg, st: PassStats, ids=None) -> None:
    fw = forward_widths(g)
    dm = demanded_widths(g)
    for op in g.ops():
        if op.kind in NO_VALUE:
            continue
        w = max(1, min(fw.get(op.id, FULL), dm.get(op.id, FULL), FULL))
        if w != op.width:
            st.rewrites.append((op.id, f"width-{w}"))
            op.width = w
    st.iterations = 1


def reduce_operator_sizes(g: Graphs, stats: PassStats | None = None):
    """Return ``(graph, stats)`` with every node's width set to its minimal sound value."""
    return apply_pass("reduce_operator_sizes", g, _reduce, stats)
