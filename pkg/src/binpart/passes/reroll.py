"""Loop rerolling: find k copies of one op group and roll them back into a loop.

Groups are consecutive runs of ops that are isomorphic up to memory
offsets in arithmetic progression.  Data may flow between neighbouring
groups only as a reduction chain (group j consumes a value of group j-1 in
the slot where group 0 consumes an outside value).  Address computations of
the form ``base + constant`` are folded into their memory op while
matching.

Inside a single-block loop whose pointer steps by ``k*s`` the groups are
*fused*: all but the first copy are deleted and the step becomes ``s``.
Elsewhere a fresh loop block with an offset counter is created.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..decompiler.cdfg import Block, Cdfg, address_key
from ..decompiler.ir import MASK32, Imm, IrOp
from .base import Graphs, PassStats, apply_pass, remove_dead, replace_uses


def _signed(v: int) -> int:
    v &= MASK32
    return v - (1 << 32) if v >> 31 else v


@dataclass
class Match:
    k: int
    groups: list[list[IrOp]]
    stride: int
    chains: list[tuple[int, int, int]] = field(default_factory=list)   # (pos, operand, source pos)
    mem: dict[int, tuple[object, int]] = field(default_factory=dict)   # pos -> (base, group-0 offset)


class Reject(Exception):
    pass


def _absorbed(blk: Block, nodes, uses) -> set[int]:
    """Address adds whose every use is the address operand of a load/store."""
    out = set()
    for op in blk.ops:
        if op.kind != "add" or not isinstance(op.operands[1], Imm) or not isinstance(op.operands[0], int):
            continue
        us = uses.get(op.id, [])
        if us and all(nodes[u].kind in ("load", "store") and nodes[u].operands[0] == op.id
                      and op.id not in nodes[u].operands[1:] for u in us):
            out.add(op.id)
    return out


def _match(groups: list[list[IrOp]], nodes, uses, outside_ok) -> Match:
    """Check the groups are rerollable; raise Reject with a reason otherwise."""
    k, n = len(groups), len(groups[0])
    where = {op.id: (j, t) for j, g in enumerate(groups) for t, op in enumerate(g)}

    def cls(o, j):
        if isinstance(o, Imm):
            return ("imm", o.value & MASK32)
        if o in where:
            gj, t = where[o]
            if gj == j:
                return ("int", t)
            if gj == j - 1:
                return ("prev", t)
            return ("far", t)
        return ("ext", o)

    m = Match(k, groups, 0)
    stride = None
    for t in range(n):
        ops = [g[t] for g in groups]
        a = ops[0]
        for b in ops[1:]:
            if (b.kind, b.size, b.signed, b.negate, b.callee) != (a.kind, a.size, a.signed, a.negate, a.callee):
                raise Reject("op kinds differ")
            if len(b.operands) != len(a.operands):
                raise Reject("arity mismatch")
            if b.kind in ("phi", "call", "input", "output", "halt", "param", "proj") or b.kind == "const" \
                    and b.value != a.value:
                raise Reject(f"{b.kind} cannot be rerolled")
        first = 0
        if a.kind in ("load", "store"):
            first = 1
            keys = [address_key(op, nodes) for op in ops]
            bases = [cls(kb, j) if isinstance(kb, int) else ("abs",) for j, (kb, _) in enumerate(keys)]
            if any(b[0] in ("prev", "far") for b in bases) or len({b for b in bases}) != 1:
                raise Reject("address bases differ")
            offs = [_signed(o) for _, o in keys]
            s = offs[1] - offs[0]
            if any(offs[j] - offs[0] != j * s for j in range(k)):
                raise Reject("non-constant stride")
            if stride is not None and s != stride:
                raise Reject("strides differ between accesses")
            stride = s
            m.mem[t] = (keys[0][0], offs[0])
        for i in range(first, len(a.operands)):
            cs = [cls(op.operands[i], j) for j, op in enumerate(ops)]
            if any(c[0] == "far" for c in cs):
                raise Reject("data flows between distant copies")
            later = set(cs[1:])
            if len(later) != 1:
                raise Reject("operands differ")
            c1 = cs[1]
            if c1[0] == "prev":
                if cs[0][0] not in ("ext", "imm"):
                    raise Reject("reduction chain has no outside input")
                m.chains.append((t, i, c1[1]))
            elif cs[0] != c1:
                raise Reject("operands differ")
    if not stride:
        raise Reject("no memory stride")
    m.stride = stride
    # only the last copy may be observed from outside the groups
    for j, g in enumerate(groups[:-1]):
        for t, op in enumerate(g):
            for u in uses.get(op.id, []):
                if u in where:
                    uj, _ = where[u]
                    if uj == j or (uj == j + 1 and any(src == t for _, _, src in m.chains)):
                        continue
                if u in outside_ok:
                    continue
                raise Reject("side exit: an intermediate copy is used outside")
    return m


def _split(cands: list[IrOp], k: int) -> list[list[IrOp]]:
    n = len(cands) // k
    return [cands[j * n:(j + 1) * n] for j in range(k)]


def _loop_control(g: Cdfg, blk: Block, nodes):
    """(pointer phi, update op, compare op) of a single-block ``p != end`` loop, or None."""
    t = blk.terminator
    if t is None or t.kind != "branch_cond" or blk.id not in blk.succs:
        return None
    cond = nodes.get(t.operands[0]) if isinstance(t.operands[0], int) else None
    if cond is None or cond.kind not in ("ne", "eq") or cond.block != blk.id:
        return None
    # continuing on (ne, taken-to-self) or (eq, fallthrough-to-self) both mean "stop at equality"
    self_on_true = (blk.succs[0] == blk.id) != t.negate
    if (cond.kind == "ne") != self_on_true:
        return None
    for upd_side, other in ((0, 1), (1, 0)):
        upd = nodes.get(cond.operands[upd_side]) if isinstance(cond.operands[upd_side], int) else None
        bound = cond.operands[other]
        if upd is None or upd.kind != "add" or upd.block != blk.id or not isinstance(upd.operands[1], Imm):
            continue
        p = nodes.get(upd.operands[0])
        if p is None or p.kind != "phi" or p.block != blk.id:
            continue
        if isinstance(bound, int) and nodes[bound].block == blk.id:
            continue
        back = [o for o, pr in zip(p.operands, p.preds) if pr == blk.id]
        if back != [upd.id]:
            continue
        return p, upd, cond
    return None


def _fuse(g: Cdfg, blk: Block, ctrl, st: PassStats, max_k: int, nodes, uses) -> bool:
    p, upd, cond = ctrl
    term = blk.terminator
    absorbed = _absorbed(blk, nodes, uses)
    control = {upd.id, cond.id, term.id}
    cands = [op for op in blk.ops if op.kind != "phi" and op.id not in control and op.id not in absorbed]
    step = _signed(upd.operands[1].value)
    best_reason = None
    for k in range(min(max_k, len(cands)), 1, -1):
        if len(cands) % k:
            continue
        groups = _split(cands, k)
        try:
            m = _match(groups, nodes, uses, outside_ok=set())
        except Reject as exc:
            best_reason = best_reason or str(exc)
            continue
        if any(base != p.id for base, _ in m.mem.values()):
            best_reason = "addresses not based on the loop pointer"
            continue
        if step != k * m.stride:
            best_reason = f"pointer step {step} is not {k}x stride {m.stride}"
            continue
        # every other phi must be loop invariant or a reduction fed by the last copy
        last = {op.id: t for t, op in enumerate(groups[-1])}
        chain_inits = {groups[0][t].operands[i] for t, i, _ in m.chains}
        ok = True
        for phi in blk.phis:
            if phi.id == p.id:
                continue
            back = [o for o, pr in zip(phi.operands, phi.preds) if pr == blk.id]
            if back == [phi.id]:
                continue
            if back and back[0] in last and phi.id in chain_inits:
                src = last[back[0]]
                if any(s == src for _, _, s in m.chains):
                    continue
            ok = False
        if any(o in (upd.id, cond.id) for gr in groups for op in gr for o in op.operands):
            ok = False
        if not ok:
            best_reason = "loop-carried values other than reductions"
            continue
        keep = groups[0]
        for j in range(1, k):
            for t, op in enumerate(groups[j]):
                if j == k - 1:
                    replace_uses(g, op.id, keep[t].id)
        dead = {op.id for gr in groups[1:] for op in gr}
        blk.ops = [op for op in blk.ops if op.id not in dead]
        upd.operands[1] = Imm(m.stride & MASK32)
        remove_dead(g)
        st.rewrites.append((p.id, f"reroll-fuse-k{k}-s{m.stride}"))
        return True
    if best_reason and len(cands) >= 2:
        st.rejected.append((p.id, best_reason))
    return False


def _straight(g: Cdfg, blk: Block, st: PassStats, max_k: int, nodes, uses, ids) -> bool:
    absorbed = _absorbed(blk, nodes, uses)
    body = [op for op in blk.ops if op.kind != "phi" and op.id not in absorbed and op is not blk.terminator]
    best = None
    for n in range(1, len(body) // 2 + 1):
        for start in range(0, len(body) - 2 * n + 1):
            if not any(op.kind in ("load", "store") for op in body[start:start + n]):
                continue
            k_hi = min(max_k, (len(body) - start) // n)
            for k in range(k_hi, 1, -1):
                groups = [body[start + j * n:start + (j + 1) * n] for j in range(k)]
                run = {op.id for gr in groups for op in gr}
                outside = {op.id for op in g.ops() if op.id not in run}
                try:
                    m = _match(groups, nodes, uses, outside_ok=set())
                except Reject:
                    continue
                if any(isinstance(b, int) and b in run for b, _ in m.mem.values()):
                    continue
                del outside
                if best is None or k * n > best[0]:
                    best = (k * n, start, m)
                break
    if best is None:
        return False
    covered, start, m = best
    # loop control costs 5 ops (counter phi, step, compare, branch, address add) plus a
    # phi per reduction; only roll when the loop block is smaller than the copies
    cost = len(m.groups[0]) + 4 + len(m.mem) + len({(t, i) for t, i, _ in m.chains})
    if cost >= covered:
        st.rejected.append((m.groups[0][0].id, f"not profitable: {cost} ops replace {covered}"))
        return False
    _build_loop(g, blk, body, start, m, ids)
    st.rewrites.append((m.groups[0][0].id, f"reroll-k{m.k}-s{m.stride}"))
    return True


def _build_loop(g: Cdfg, blk: Block, body, start, m: Match, ids) -> None:
    k, groups = m.k, m.groups
    run_ids = {op.id for gr in groups for op in gr}
    last = blk.ops.index(groups[-1][-1])
    head_ops, tail_ops = [], []
    for i, op in enumerate(blk.ops):
        if op.id in run_ids:
            continue
        (head_ops if i < last or op.kind == "phi" else tail_ops).append(op)
    lid, tid = next(ids), next(ids)
    loop = Block(lid, groups[0][0].origin, [], [lid, tid])
    tail = Block(tid, tail_ops[0].origin if tail_ops else groups[-1][-1].origin, tail_ops, list(blk.succs))
    for s in dict.fromkeys(blk.succs):
        for phi in g.blocks[s].phis:
            phi.preds = [tid if p == blk.id else p for p in phi.preds]
    blk.ops = head_ops
    blk.succs = [lid]
    origin = groups[0][0].origin
    i_phi = IrOp(next(ids), "phi", [Imm(0)], origin=origin, preds=[blk.id], block=lid)
    loop.ops.append(i_phi)
    chain_phis = {}
    for t, i, src in m.chains:
        if (t, i) in chain_phis:
            continue
        init = groups[0][t].operands[i]
        phi = IrOp(next(ids), "phi", [init], origin=origin, preds=[blk.id], block=lid)
        chain_phis[(t, i)] = (phi, src)
        loop.ops.append(phi)
    keep = groups[0]
    for t, op in enumerate(keep):
        op.block = lid
        if t in m.mem:
            base, off0 = m.mem[t]
            if isinstance(base, int):
                b0 = IrOp(next(ids), "add", [base, Imm(off0 & MASK32)], origin=op.origin, block=blk.id)
                blk.ops.append(b0)           # loop invariant, computed once before the loop
                addr = IrOp(next(ids), "add", [b0.id, i_phi.id], origin=op.origin, block=lid)
            else:
                addr = IrOp(next(ids), "add", [i_phi.id, Imm(off0 & MASK32)],
                            origin=op.origin, block=lid)
            loop.ops.append(addr)
            op.operands[0] = addr.id
        for (ct, ci), (phi, _) in chain_phis.items():
            if ct == t:
                op.operands[ci] = phi.id
        loop.ops.append(op)
    nxt = IrOp(next(ids), "add", [i_phi.id, Imm(m.stride & MASK32)], origin=origin, block=lid)
    cmp_ = IrOp(next(ids), "ne", [nxt.id, Imm((k * m.stride) & MASK32)], width=1, origin=origin, block=lid)
    br = IrOp(next(ids), "branch_cond", [cmp_.id], origin=origin, block=lid)
    loop.ops.extend([nxt, cmp_, br])
    i_phi.operands.append(nxt.id)
    i_phi.preds.append(lid)
    for (t, i), (phi, src) in chain_phis.items():
        phi.operands.append(keep[src].id)
        phi.preds.append(lid)
    g.blocks[lid] = loop
    g.blocks[tid] = tail
    for t, op in enumerate(groups[-1]):
        replace_uses(g, op.id, keep[t].id)


def _reroll(g: Cdfg, st: PassStats, ids, max_k: int) -> None:
    for bid in sorted(g.blocks):
        blk = g.blocks[bid]
        nodes = g.nodes()
        uses = g.uses()
        st.iterations += 1
        ctrl = _loop_control(g, blk, nodes)
        if ctrl is not None:
            _fuse(g, blk, ctrl, st, max_k, nodes, uses)
        elif blk.id not in blk.succs:
            _straight(g, blk, st, max_k, nodes, uses, ids)


def reroll_loops(g: Graphs, stats: PassStats | None = None, max_factor: int = 8):
    """Return ``(graph, stats)`` with unrolled copies rolled back into loops."""
    return apply_pass("reroll_loops", g, lambda h, st, ids: _reroll(h, st, ids, max_factor), stats)
