"""Dominator and post-dominator trees (Cooper, Harvey and Kennedy)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .cfg import Graph

EXIT = -1  # virtual exit node of the post-dominator tree


@dataclass
class DomTree:
    root: int
    idom: dict[int, int]
    order: list[int]                    # reverse postorder of reachable nodes
    children: dict[int, list[int]] = field(default_factory=dict)
    unreachable: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.children = {n: [] for n in self.idom}
        for n, d in self.idom.items():
            if n != d:
                self.children[d].append(n)
        for c in self.children.values():
            c.sort(key=self.order.index)
        self._depth = {}
        for n in self.order:
            self._depth[n] = 0 if n == self.root else self._depth[self.idom[n]] + 1

    def dominates(self, a: int, b: int) -> bool:
        if a not in self.idom or b not in self.idom:
            return False
        while self._depth[b] > self._depth[a]:
            b = self.idom[b]
        return a == b

    def dominators(self, n: int) -> set[int]:
        out = {n}
        while self.idom[n] != n:
            n = self.idom[n]
            out.add(n)
        return out

    def frontier(self, graph: Graph) -> dict[int, set[int]]:
        df: dict[int, set[int]] = {n: set() for n in self.idom}
        preds = graph.preds()
        for n in self.idom:
            ps = [p for p in preds.get(n, []) if p in self.idom]
            if len(ps) < 2:
                continue
            for p in ps:
                runner = p
                while runner != self.idom[n]:
                    df[runner].add(n)
                    runner = self.idom[runner]
        return df


def _rpo(entry: int, succs: dict[int, list[int]]) -> list[int]:
    seen, post = {entry}, []
    stack = [(entry, iter(succs.get(entry, ())))]
    while stack:
        node, it = stack[-1]
        for s in it:
            if s not in seen:
                seen.add(s)
                stack.append((s, iter(succs.get(s, ()))))
                break
        else:
            stack.pop()
            post.append(node)
    return post[::-1]


def _chk(entry: int, succs: dict[int, list[int]]) -> tuple[dict[int, int], list[int]]:
    order = _rpo(entry, succs)
    index = {n: i for i, n in enumerate(order)}
    preds: dict[int, list[int]] = {n: [] for n in order}
    for n in order:
        for s in succs.get(n, ()):
            if s in index:
                preds[s].append(n)
    idom = {entry: entry}

    def intersect(a, b):
        while a != b:
            while index[a] > index[b]:
                a = idom[a]
            while index[b] > index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for n in order[1:]:
            new = None
            for p in preds[n]:
                if p in idom:
                    new = p if new is None else intersect(p, new)
            if idom.get(n) != new:
                idom[n] = new
                changed = True
    return idom, order


def compute_dominators(graph: Graph) -> DomTree:
    """Dominator tree of the nodes reachable from ``graph.entry``.

    Unreachable nodes are dropped with a warning and listed in
    ``DomTree.unreachable``.
    """
    idom, order = _chk(graph.entry, graph.succs)
    dropped = set(graph.succs) - set(idom)
    if dropped:
        warnings.warn(f"unreachable blocks dropped: {sorted(dropped)}", stacklevel=2)
    return DomTree(graph.entry, idom, order, unreachable=dropped)


def compute_postdominators(graph: Graph) -> DomTree:
    """Post-dominator tree rooted at a virtual exit joined to every sink.

    Nodes that cannot reach an exit (infinite loops) are absent.
    """
    reachable = set(_rpo(graph.entry, graph.succs))
    rev: dict[int, list[int]] = {EXIT: []}
    for n in reachable:
        rev.setdefault(n, [])
        ss = [s for s in graph.succs.get(n, ()) if s in reachable]
        if not ss:
            rev[EXIT].append(n)
        for s in ss:
            rev.setdefault(s, []).append(n)
    for v in rev.values():
        v.sort()
    idom, order = _chk(EXIT, rev)
    return DomTree(EXIT, idom, order)
