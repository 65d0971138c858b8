"""SSA control/data flow graph construction.

Each procedure becomes a :class:`Cdfg` whose blocks mirror the Cfg blocks.
Register slots are renamed into value nodes; phis sit at join points for
registers that are live there.  Calls pass exactly the registers the callee
may read (its *ref* set) and receive one ``proj`` node per register it may
write (its *mod* set), so every procedure is a closed dataflow unit.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..errors import MalformedCdfg
from ..isa import ProgramImage
from .cfg import Cfg, Graph
from .dominators import compute_dominators
from .ir import KINDS, TERMINATORS, Imm, IrOp, Reg
from .structure import Induction, Region, recover_structures

SP = 29
PRE_ENTRY = 1 << 20   # id offset of the synthetic block placed before a looping entry


@dataclass
class Block:
    id: int
    start: int
    ops: list[IrOp]
    succs: list[int]
    preds: list[int] = field(default_factory=list)
    live_in: frozenset = frozenset()
    live_out: frozenset = frozenset()

    @property
    def phis(self) -> list[IrOp]:
        return [op for op in self.ops if op.kind == "phi"]

    @property
    def terminator(self) -> IrOp | None:
        if self.ops and self.ops[-1].kind in TERMINATORS:
            return self.ops[-1]
        return None


@dataclass
class Cdfg:
    name: str
    entry_addr: int
    entry: int
    blocks: dict[int, Block]
    params: dict[int, int]                 # register -> param node id
    returns: tuple[int, ...] = ()          # registers carried by ``return``
    mem_edges: list[tuple[int, int]] = field(default_factory=list)
    structure: Region | None = None

    def nodes(self) -> dict[int, IrOp]:
        return {op.id: op for b in self.blocks.values() for op in b.ops}

    def ops(self):
        for bid in sorted(self.blocks):
            yield from self.blocks[bid].ops

    def node_count(self) -> int:
        return sum(len(b.ops) for b in self.blocks.values())

    def graph(self) -> Graph:
        return Graph(self.entry, {b.id: list(dict.fromkeys(b.succs)) for b in self.blocks.values()})

    def data_edges(self) -> list[tuple[int, int]]:
        return [(o, op.id) for op in self.ops() for o in op.operands if isinstance(o, int)]

    def uses(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for op in self.ops():
            for o in op.operands:
                if isinstance(o, int):
                    out.setdefault(o, []).append(op.id)
        return out

    def refresh(self) -> None:
        """Recompute derived data (preds, owning block, memory order, structure)."""
        for b in self.blocks.values():
            b.preds = []
        for b in sorted(self.blocks.values(), key=lambda b: b.id):
            for s in dict.fromkeys(b.succs):
                self.blocks[s].preds.append(b.id)
            for op in b.ops:
                op.block = b.id
        self.mem_edges = memory_edges(self)
        self.structure = recover_structures(self.graph(), inductions=cdfg_inductions(self))

    def verify(self) -> None:
        """Raise MalformedCdfg unless the graph satisfies the structural invariants."""
        nodes: dict[int, IrOp] = {}
        for b in self.blocks.values():
            for op in b.ops:
                if op.id in nodes:
                    raise MalformedCdfg(f"{self.name}: duplicate node id {op.id}")
                nodes[op.id] = op
        dom = compute_dominators(self.graph())
        pos = {}
        for b in self.blocks.values():
            for i, op in enumerate(b.ops):
                pos[op.id] = (b.id, i)
        for b in self.blocks.values():
            for s in b.succs:
                if s not in self.blocks:
                    raise MalformedCdfg(f"{self.name}: block {b.id} jumps to missing block {s}")
            seen_body = False
            for i, op in enumerate(b.ops):
                if op.kind not in KINDS:
                    raise MalformedCdfg(f"node {op.id}: unknown kind {op.kind}")
                if not op.arity_ok():
                    raise MalformedCdfg(f"node {op.id}: bad arity for {op.kind}")
                if not 1 <= op.width <= 32:
                    raise MalformedCdfg(f"node {op.id}: width {op.width} out of range")
                if op.kind in TERMINATORS and i != len(b.ops) - 1:
                    raise MalformedCdfg(f"node {op.id}: terminator not last in block {b.id}")
                if op.kind == "phi":
                    if seen_body:
                        raise MalformedCdfg(f"node {op.id}: phi after ordinary op")
                    if sorted(op.preds) != sorted(b.preds):
                        raise MalformedCdfg(f"node {op.id}: phi preds {op.preds} != {b.preds}")
                else:
                    seen_body = True
                for k, o in enumerate(op.operands):
                    if isinstance(o, Imm):
                        continue
                    if not isinstance(o, int) or o not in nodes:
                        raise MalformedCdfg(f"node {op.id}: dangling operand {o!r}")
                    db, di = pos[o]
                    if op.kind == "phi":
                        if not dom.dominates(db, op.preds[k]):
                            raise MalformedCdfg(f"node {op.id}: operand {o} does not reach pred")
                    elif db == b.id:
                        if di >= i:
                            raise MalformedCdfg(f"node {op.id}: uses {o} before its definition")
                    elif not dom.dominates(db, b.id):
                        raise MalformedCdfg(f"node {op.id}: operand {o} does not dominate use")
            t = b.terminator
            want = {"branch_cond": 2, "jump": 1, "return": 0, "halt": 0, None: 1}[t.kind if t else None]
            if len(b.succs) != want:
                raise MalformedCdfg(f"block {b.id}: {len(b.succs)} successors for {t.kind if t else 'fallthrough'}")


@dataclass
class CdfgProgram:
    procedures: dict[int, Cdfg]            # entry address -> graph
    entry: int                             # entry address of the program
    image: ProgramImage | None = None
    refs: dict[int, tuple[int, ...]] = field(default_factory=dict)
    mods: dict[int, tuple[int, ...]] = field(default_factory=dict)
    failed: dict[int, Exception] = field(default_factory=dict)
    block_addrs: dict[int, tuple[int, ...]] = field(default_factory=dict)   # block id -> instruction addresses

    @property
    def main(self) -> Cdfg:
        return self.procedures[self.entry]

    def node_count(self) -> int:
        return sum(g.node_count() for g in self.procedures.values())

    def verify(self) -> None:
        for g in self.procedures.values():
            g.verify()

    def copy(self) -> "CdfgProgram":
        return CdfgProgram({a: copy.deepcopy(g) for a, g in self.procedures.items()}, self.entry,
                           self.image, dict(self.refs), dict(self.mods), dict(self.failed),
                           dict(self.block_addrs))


def next_id(g: Cdfg | CdfgProgram) -> int:
    graphs = g.procedures.values() if isinstance(g, CdfgProgram) else [g]
    return 1 + max((op.id for h in graphs for op in h.ops()), default=-1)


# -- memory disambiguation ---------------------------------------------------

def address_key(op: IrOp, nodes: dict[int, IrOp]) -> tuple[object, int]:
    """(base, constant offset) of a load/store address."""
    a = op.operands[0]
    if isinstance(a, Imm):
        return ("abs", a.value)
    d = nodes.get(a)
    if d is not None and d.kind == "add":
        x, y = d.operands
        if isinstance(y, Imm) and isinstance(x, int):
            return (x, y.value)
        if isinstance(x, Imm) and isinstance(y, int):
            return (y, x.value)
    return (a, 0)


def may_alias(a: IrOp, b: IrOp, nodes: dict[int, IrOp]) -> bool:
    if a.kind == "call" or b.kind == "call":
        return True
    ba, oa = address_key(a, nodes)
    bb, ob = address_key(b, nodes)
    if ba != bb:
        return True
    oa, ob = oa & 0xFFFFFFFF, ob & 0xFFFFFFFF
    return oa < ob + (b.size or 4) and ob < oa + (a.size or 4)


def memory_edges(g: Cdfg) -> list[tuple[int, int]]:
    """Order edges between memory operations of a block that may touch the same bytes."""
    nodes = g.nodes()
    out = []
    for bid in sorted(g.blocks):
        mem = [op for op in g.blocks[bid].ops if op.kind in ("load", "store", "call")]
        for i, a in enumerate(mem):
            for b in mem[i + 1:]:
                if a.kind == "load" and b.kind == "load":
                    continue
                if may_alias(a, b, nodes):
                    out.append((a.id, b.id))
    return out


# -- construction -------------------------------------------------------------

def _reg_uses(op: IrOp, refs, mods, own_mod) -> list[int]:
    if op.kind == "call":
        return list(refs.get(op.callee, ()))
    if op.kind == "return":
        return list(own_mod)
    return [o.n for o in op.operands if isinstance(o, Reg)]


def _reg_defs(op: IrOp, mods) -> list[int]:
    if op.kind == "call":
        return list(mods.get(op.callee, ()))
    return [op.dest.n] if op.dest is not None else []


def _liveness(cfg: Cfg, blocks: list[int], succs, refs, mods, own_mod):
    return _liveness_ops({b: cfg.blocks[b].ops for b in blocks}, blocks, succs, refs, mods, own_mod)


def _liveness_ops(ops_of, blocks, succs, refs, mods, own_mod):
    use, defs = {}, {}
    for b in blocks:
        u, d = set(), set()
        for op in ops_of[b]:
            u.update(r for r in _reg_uses(op, refs, mods, own_mod) if r not in d)
            d.update(_reg_defs(op, mods))
        use[b], defs[b] = u, d
    live_in = {b: set() for b in blocks}
    live_out = {b: set() for b in blocks}
    changed = True
    while changed:
        changed = False
        for b in reversed(blocks):
            out = set().union(*(live_in[s] for s in succs[b])) if succs[b] else set()
            inn = use[b] | (out - defs[b])
            if out != live_out[b] or inn != live_in[b]:
                live_out[b], live_in[b] = out, inn
                changed = True
    return live_in, live_out


def _intra_succs(cfg: Cfg, blocks: list[int]) -> dict[int, list[int]]:
    """Ordered successors: [taken, fallthrough] for conditional branches."""
    out = {}
    for b in blocks:
        es = [e for e in cfg.edges if e.src == b and e.kind in ("taken", "fallthrough")]
        taken = [e.dst for e in es if e.kind == "taken"]
        fall = [e.dst for e in es if e.kind == "fallthrough"]
        out[b] = taken + fall
    return out


def _signatures(cfg: Cfg, procs):
    all_regs = tuple(range(1, 32))
    mods: dict[int, set] = {}
    for a, p in procs.items():
        if p.error is not None:
            mods[a] = set(all_regs)
            continue
        mods[a] = {op.dest.n for b in p.blocks for op in cfg.blocks[b].ops if op.dest is not None}
    calls = {a: {op.callee for b in p.blocks for op in cfg.blocks[b].ops if op.kind == "call"}
             for a, p in procs.items()}
    changed = True
    while changed:
        changed = False
        for a in procs:
            new = mods[a].union(*(mods.get(c, set(all_regs)) for c in calls[a]))
            if new != mods[a]:
                mods[a] = new
                changed = True
    mods_t = {a: tuple(sorted(m)) for a, m in mods.items()}
    refs = {a: (all_regs if procs[a].error is not None else ()) for a in procs}
    succs = {a: _intra_succs(cfg, p.blocks) for a, p in procs.items()}
    changed = True
    while changed:
        changed = False
        for a, p in procs.items():
            if p.error is not None:
                continue
            live_in, _ = _liveness(cfg, p.blocks, succs[a], refs, mods_t, mods_t[a])
            new = tuple(sorted(live_in[p.entry_block]))
            if new != refs[a]:
                refs[a] = new
                changed = True
    return refs, mods_t, succs


def _idf(defs: set[int], df: dict[int, set[int]]) -> set[int]:
    out, work = set(), list(defs)
    while work:
        n = work.pop()
        for f in df.get(n, ()):
            if f not in out:
                out.add(f)
                work.append(f)
    return out


class _Ids:
    def __init__(self, start):
        self.n = start

    def __call__(self):
        self.n += 1
        return self.n - 1


def _build_proc(cfg: Cfg, proc, succs, refs, mods, ids: _Ids) -> Cdfg:
    blocks = list(proc.blocks)
    succs = dict(succs)
    ops_of = {b: cfg.blocks[b].ops for b in blocks}
    start_of = {b: cfg.blocks[b].start for b in blocks}
    entry = proc.entry_block
    if any(entry in succs[b] for b in blocks):
        # the entry is a loop header: parameters get their own pre-entry block
        pre = PRE_ENTRY + entry
        blocks.insert(0, pre)
        succs[pre] = [entry]
        ops_of[pre] = []
        start_of[pre] = start_of[entry]
        entry = pre
    own_mod = mods[proc.entry_addr]
    live_in, live_out = _liveness_ops(ops_of, blocks, succs, refs, mods, own_mod)
    graph = Graph(entry, {b: list(dict.fromkeys(succs[b])) for b in blocks})
    dom = compute_dominators(graph)
    df = dom.frontier(graph)
    preds = graph.preds()

    def_blocks: dict[int, set[int]] = {}
    for b in blocks:
        for op in ops_of[b]:
            for r in _reg_defs(op, mods):
                def_blocks.setdefault(r, set()).add(b)
    new_blocks: dict[int, Block] = {}
    for b in blocks:
        new_blocks[b] = Block(b, start_of[b], [], list(succs[b]), preds=list(preds.get(b, [])),
                              live_in=frozenset(live_in[b]), live_out=frozenset(live_out[b]))
    phi_reg: dict[int, int] = {}
    for r in sorted(def_blocks.keys() | live_in[entry]):
        for b in sorted(_idf(def_blocks.get(r, set()) | {entry}, df)):
            if r in live_in[b]:
                phi = IrOp(ids(), "phi", [], origin=start_of[b], preds=[], block=b)
                phi_reg[phi.id] = r
                new_blocks[b].ops.append(phi)

    params = {}
    stacks: dict[int, list] = {}
    for r in refs[proc.entry_addr]:
        p = IrOp(ids(), "param", [], origin=start_of[entry], reg=r, block=entry)
        params[r] = p.id
        stacks[r] = [p.id]
        new_blocks[entry].ops.append(p)

    def cur(r):
        if r == 0:
            return Imm(0)
        st = stacks.get(r)
        if not st:
            raise MalformedCdfg(f"{proc.name}: register r{r} used before any definition")
        return st[-1]

    def rename(b):
        pushed = []
        blk = new_blocks[b]
        for op in blk.ops:
            if op.kind == "phi":
                r = phi_reg[op.id]
                stacks.setdefault(r, []).append(op.id)
                pushed.append(r)
        body = []
        for lop in ops_of[b]:
            op = copy.copy(lop)
            op.anno = dict(lop.anno)
            op.block = b
            op.dest = None
            if op.kind == "call":
                args = refs.get(op.callee, ())
                op.operands = [cur(r) for r in args]
                op.anno["args"] = tuple(args)
                body.append(op)
                for r in mods.get(op.callee, ()):
                    pj = IrOp(ids(), "proj", [op.id], origin=op.origin, reg=r, block=b)
                    body.append(pj)
                    stacks.setdefault(r, []).append(pj.id)
                    pushed.append(r)
                continue
            if op.kind == "return":
                op.operands = [cur(r) for r in own_mod]
                op.anno["regs"] = tuple(own_mod)
            else:
                op.operands = [cur(o.n) if isinstance(o, Reg) else o for o in lop.operands]
            if op.kind == "branch_cond" and len(set(succs[b])) == 1:
                continue          # both arms reach the same block
            body.append(op)
            if lop.dest is not None:
                stacks.setdefault(lop.dest.n, []).append(op.id)
                pushed.append(lop.dest.n)
        blk.ops.extend(body)
        for s in dict.fromkeys(succs[b]):
            for phi in new_blocks[s].ops:
                if phi.kind != "phi":
                    continue
                phi.operands.append(cur(phi_reg[phi.id]))
                phi.preds.append(b)
        for c in dom.children.get(b, []):
            rename(c)
        for r in pushed:
            stacks[r].pop()

    rename(entry)
    for b in new_blocks.values():
        if len(b.succs) == 2 and b.succs[0] == b.succs[1]:
            b.succs = b.succs[:1]
    g = Cdfg(proc.name, proc.entry_addr, entry, new_blocks, params, tuple(own_mod))
    g.refresh()
    return g


def build_cdfg(cfg: Cfg, image: ProgramImage | None = None) -> CdfgProgram:
    """SSA graphs for every decompilable procedure of ``cfg``."""
    import sys

    procs = cfg.procedures
    refs, mods, succs = _signatures(cfg, procs)
    ids = _Ids(1 + max((op.id for b in cfg.blocks.values() for op in b.ops), default=-1))
    out, failed = {}, {}
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10000))
    try:
        for a, p in procs.items():
            if p.error is not None:
                failed[a] = p.error
                continue
            out[a] = _build_proc(cfg, p, succs[a], refs, mods, ids)
    finally:
        sys.setrecursionlimit(limit)
    entry = cfg.blocks[cfg.entry].start
    addrs = {b.id: tuple(b.addrs) for b in cfg.blocks.values()}
    return CdfgProgram(out, entry, image, refs, mods, failed, addrs)


def cdfg_inductions(g: Cdfg):
    """Induction candidates in SSA form: a header phi fed by ``phi + c`` around the loop."""

    def analyze(blocks, header, latches):
        nodes = g.nodes()
        out = []
        for phi in g.blocks[header].phis:
            init = step = None
            inner = [o for o, p in zip(phi.operands, phi.preds) if p in blocks]
            outer = [o for o, p in zip(phi.operands, phi.preds) if p not in blocks]
            if len(inner) != 1 or len(outer) != 1:
                continue
            upd = nodes.get(inner[0]) if isinstance(inner[0], int) else None
            if upd is None or upd.kind not in ("add", "sub") or phi.id not in upd.operands:
                continue
            other = [o for o in upd.operands if o != phi.id]
            if len(other) != 1 or not isinstance(other[0], Imm):
                continue
            step = other[0].value
            step = step - (1 << 32) if step >> 31 else step
            if upd.kind == "sub":
                step = -step
            o = outer[0]
            if isinstance(o, Imm):
                init = o.value
            elif isinstance(o, int) and nodes.get(o) is not None and nodes[o].kind == "const":
                init = nodes[o].value
            out.append(Induction(phi.id, init, step, _ssa_bound(g, nodes, blocks, header, latches,
                                                                {phi.id, upd.id})))
        return out

    return analyze


def _ssa_bound(g, nodes, blocks, header, latches, vals):
    for b in [header, *latches]:
        t = g.blocks[b].terminator
        if t is None or t.kind != "branch_cond":
            continue
        cond = nodes.get(t.operands[0]) if isinstance(t.operands[0], int) else None
        for _ in range(3):
            if cond is None:
                break
            hit = [o for o in cond.operands if o in vals]
            if hit and cond.kind in ("slt", "sltu", "eq", "ne"):
                other = [o for o in cond.operands if o not in vals]
                desc = (str(other[0]) if isinstance(other[0], Imm) else f"n{other[0]}") if other else "self"
                return (cond.kind, desc)
            nxt = [nodes[o] for o in cond.operands if isinstance(o, int) and o in nodes
                   and nodes[o].kind in ("slt", "sltu", "eq", "ne")]
            cond = nxt[0] if nxt else None
    return None
