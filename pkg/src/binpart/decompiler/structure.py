"""Control structure recovery: natural loops, if-then(-else), unstructured regions.

The tree is built over any :class:`Graph`; an optional callback annotates
loops with induction-variable candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .cfg import Cfg, Graph
from .dominators import EXIT, DomTree, compute_dominators, compute_postdominators


@dataclass
class Induction:
    var: object              # register number (Cfg level) or phi node id (Cdfg level)
    init: int | None
    step: int | None
    bound: tuple | None      # (compare kind, other operand description)


@dataclass
class Region:
    kind: str                # Seq | IfThen | IfThenElse | Loop | Unstructured | Block
    blocks: frozenset
    children: list["Region"] = field(default_factory=list)
    header: int | None = None
    back_edges: list[tuple[int, int]] = field(default_factory=list)
    loop_kind: str | None = None          # pre-tested | post-tested
    inductions: list[Induction] = field(default_factory=list)
    edges: list[tuple[int, int]] = field(default_factory=list)   # Block leaves only

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def loops(self) -> list["Region"]:
        """Loop regions, innermost first."""
        out = [r for r in self.walk() if r.kind == "Loop"]
        return sorted(out, key=lambda r: (len(r.blocks), min(r.blocks)))

    def contains_unstructured(self) -> bool:
        return any(r.kind == "Unstructured" for r in self.walk())

    def flatten_edges(self) -> set[tuple[int, int]]:
        return {e for r in self.walk() if r.kind == "Block" for e in r.edges}

    def leaf_blocks(self) -> list[int]:
        return [next(iter(r.blocks)) for r in self.walk() if r.kind == "Block"]

    def describe(self, indent: int = 0) -> str:
        pad = "  " * indent
        extra = ""
        if self.kind == "Loop":
            extra = f" header={self.header} {self.loop_kind}"
        line = f"{pad}{self.kind}{extra} {sorted(self.blocks)}"
        if self.kind == "Block":
            return line
        return "\n".join([line] + [c.describe(indent + 1) for c in self.children])


StructureTree = Region

InductionFn = Callable[[frozenset, int, list], list]


def _sccs(nodes, succs) -> list[set]:
    index, low, on, stack, out = {}, {}, set(), [], []
    counter = [0]

    def visit(v):
        # iterative Tarjan
        work = [(v, iter(succs.get(v, ())))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in nodes:
                    continue
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succs.get(w, ()))))
                    advanced = True
                    break
                if w in on:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                out.append(comp)

    for n in sorted(nodes):
        if n not in index:
            visit(n)
    return out


def _natural_loop(header: int, sources: list[int], preds) -> set[int]:
    body = {header}
    stack = [s for s in sources if s != header]
    body.update(stack)
    while stack:
        n = stack.pop()
        for p in preds.get(n, ()):
            if p not in body:
                body.add(p)
                stack.append(p)
    return body


class _Entity:
    def __init__(self, kind, blocks, **kw):
        self.kind = kind
        self.blocks = frozenset(blocks)
        self.kw = kw


def recover_structures(graph: Graph | Cfg, domtree: DomTree | None = None,
                       inductions: InductionFn | None = None) -> Region:
    """Build the structure tree of one procedure graph."""
    if isinstance(graph, Cfg):
        cfg = graph
        graph = cfg.graph()
        if inductions is None:
            inductions = cfg_inductions(cfg)
    dom = domtree or compute_dominators(graph)
    nodes = set(dom.idom)
    succs = {n: [s for s in graph.succs.get(n, ()) if s in nodes] for n in nodes}
    preds: dict[int, list[int]] = {n: [] for n in nodes}
    for n in sorted(nodes):
        for s in succs[n]:
            preds[s].append(n)
    pdom = compute_postdominators(Graph(graph.entry, succs))

    back = [(u, h) for u in sorted(nodes) for h in succs[u] if dom.dominates(h, u)]
    by_header: dict[int, list[int]] = {}
    for u, h in back:
        by_header.setdefault(h, []).append(u)

    entities: list[_Entity] = []
    for h, sources in sorted(by_header.items()):
        body = _natural_loop(h, sources, preds)
        entities.append(_Entity("Loop", body, header=h, back=[(u, h) for u in sources]))

    # cycles that survive removing back edges are irreducible
    back_set = set(back)
    fwd = {n: [s for s in succs[n] if (n, s) not in back_set] for n in nodes}
    full = _sccs(nodes, succs)
    for comp in _sccs(nodes, fwd):
        if len(comp) > 1 or any(n in fwd[n] for n in comp):
            whole = next(c for c in full if comp <= c)
            if not any(e.kind == "Unstructured" and e.blocks == frozenset(whole) for e in entities):
                entities.append(_Entity("Unstructured", whole))

    loop_sets = [e for e in entities if e.kind in ("Loop", "Unstructured")]

    def innermost_loop(n):
        cands = [e for e in loop_sets if n in e.blocks]
        return min(cands, key=lambda e: len(e.blocks)) if cands else None

    # conditionals: a branch whose arms re-join at its immediate post-dominator
    for b in sorted(nodes):
        if len(succs[b]) != 2:
            continue
        owner = innermost_loop(b)
        scope = owner.blocks if owner else frozenset(nodes)
        if owner and owner.kind == "Loop":
            h = owner.kw["header"]
            if any(s not in scope or s == h for s in succs[b]):
                continue   # loop exit or latch test: part of the loop itself
        elif any(s not in scope for s in succs[b]):
            continue
        j = pdom.idom.get(b)
        body = set()
        ok = j is not None and j != EXIT
        if ok:
            stack = [s for s in succs[b] if s != j]
            body = {b, *stack}
            while stack:
                n = stack.pop()
                for s in succs[n]:
                    if s != j and s not in body:
                        body.add(s)
                        stack.append(s)
            ok = body <= scope and all(dom.dominates(b, n) for n in body)
            if owner and owner.kind == "Loop":
                ok = ok and owner.kw["header"] not in body
        if ok:
            kind = "IfThen" if j in succs[b] else "IfThenElse"
            entities.append(_Entity(kind, body, branch=b, join=j))
        else:
            rest = {b}
            stack = [b]
            while stack:
                n = stack.pop()
                for s in succs[n]:
                    if s in scope and s not in rest and dom.dominates(b, s):
                        rest.add(s)
                        stack.append(s)
            entities.append(_Entity("Unstructured", rest))

    entities = _resolve_overlaps(entities)
    return _build_tree(entities, nodes, succs, graph.entry, inductions)


def _resolve_overlaps(entities: list[_Entity]) -> list[_Entity]:
    """Merge partially overlapping regions into Unstructured ones until nesting is proper."""
    ents = list(entities)
    changed = True
    while changed:
        changed = False
        for i in range(len(ents)):
            for j in range(i + 1, len(ents)):
                a, b = ents[i], ents[j]
                inter = a.blocks & b.blocks
                if inter and not (a.blocks <= b.blocks or b.blocks <= a.blocks):
                    merged = _Entity("Unstructured", a.blocks | b.blocks)
                    ents = [e for k, e in enumerate(ents) if k not in (i, j)] + [merged]
                    changed = True
                    break
                if a.blocks == b.blocks and a.kind != b.kind and "Unstructured" in (a.kind, b.kind):
                    keep = a if a.kind == "Unstructured" else b
                    ents = [e for k, e in enumerate(ents) if k not in (i, j)] + [keep]
                    changed = True
                    break
            if changed:
                break
    # drop duplicates with identical block sets and kind
    seen, out = set(), []
    for e in ents:
        key = (e.kind, e.blocks)
        if key not in seen:
            seen.add(key)
            out.append(e)
    return out


_RANK = {"Unstructured": 0, "Loop": 1, "IfThenElse": 2, "IfThen": 3}


def _build_tree(entities, nodes, succs, entry, inductions) -> Region:
    ents = sorted(entities, key=lambda e: (-len(e.blocks), _RANK[e.kind], min(e.blocks)))
    regions = []
    for e in ents:
        r = Region(e.kind, e.blocks)
        if e.kind == "Loop":
            h = e.kw["header"]
            r.header = h
            r.back_edges = sorted(e.kw["back"])
            latches = [u for u, _ in r.back_edges]
            if any(s not in e.blocks for s in succs[h]):
                r.loop_kind = "pre-tested"
            else:
                r.loop_kind = "post-tested"
            if inductions is not None:
                r.inductions = inductions(e.blocks, h, latches)
        elif e.kind != "Unstructured":
            r.header = e.kw["branch"]
        regions.append(r)
    root = Region("Seq", frozenset(nodes))

    def parent_of(idx):
        blocks = regions[idx].blocks
        best = root
        for k in range(idx):
            cand = regions[k]
            if blocks <= cand.blocks and (best is root or len(cand.blocks) <= len(best.blocks)):
                best = cand
        return best

    for i, r in enumerate(regions):
        parent_of(i).children.append(r)

    def smallest(n):
        best = root
        for r in regions:
            if n in r.blocks and (best is root or len(r.blocks) < len(best.blocks)):
                best = r
        return best

    for n in sorted(nodes):
        leaf = Region("Block", frozenset({n}), edges=[(n, s) for s in succs[n]])
        smallest(n).children.append(leaf)

    def order(r):
        r.children.sort(key=lambda c: (min(c.blocks), c.kind != "Block"))
        for c in r.children:
            order(c)

    order(root)
    return root


def cfg_inductions(cfg: Cfg) -> InductionFn:
    """Induction candidates over register-symbolic IR: ``r = r + c`` defined once in the loop."""
    from .ir import Imm, Reg

    def analyze(blocks, header, latches):
        defs: dict[int, list] = {}
        for b in blocks:
            for op in cfg.blocks[b].ops:
                if op.dest is not None:
                    defs.setdefault(op.dest.n, []).append(op)
        out = []
        preds = [e.src for e in cfg.edges if e.dst == header and e.kind in ("taken", "fallthrough")]
        outside = [p for p in preds if p not in blocks]
        for reg, ds in sorted(defs.items()):
            if len(ds) != 1:
                continue
            d = ds[0]
            if d.kind not in ("add", "sub") or Reg(reg) not in d.operands:
                continue
            other = [o for o in d.operands if o != Reg(reg)]
            if len(other) != 1 or not isinstance(other[0], Imm):
                continue
            step = other[0].value
            step = step - (1 << 32) if step >> 31 else step
            if d.kind == "sub":
                step = -step
            init = None
            if len(outside) == 1:
                for op in reversed(cfg.blocks[outside[0]].ops):
                    if op.dest == Reg(reg):
                        init = op.value if op.kind == "const" else None
                        break
            out.append(Induction(reg, init, step, _bound(cfg, blocks, header, latches, reg)))
        return out

    return analyze


def _bound(cfg, blocks, header, latches, reg):
    from .ir import Reg

    for b in [header, *latches]:
        ops = cfg.blocks[b].ops
        if not ops or ops[-1].kind != "branch_cond":
            continue
        local = {op.id: op for op in ops}
        by_dest = {op.dest.n: op for op in ops if op.dest is not None}
        cond = local.get(ops[-1].operands[0]) if isinstance(ops[-1].operands[0], int) else None
        for _ in range(3):
            if cond is None:
                break
            if Reg(reg) in cond.operands and cond.kind in ("slt", "sltu", "eq", "ne"):
                other = [str(o) for o in cond.operands if o != Reg(reg)]
                return (cond.kind, other[0] if other else str(Reg(reg)))
            nxt = None
            for o in cond.operands:
                if isinstance(o, Reg) and o.n in by_dest:
                    nxt = by_dest[o.n]
                    break
            cond = nxt
    return None
