"""Region-level alias relation and the groups it induces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


def regions_alias(a, b) -> bool:
    return any(x.intersects(y) for x in a.addr_set for y in b.addr_set)


@dataclass
class AliasRelation:
    ids: list[str]
    pairs: frozenset                     # frozenset({id_a, id_b}) for every aliasing pair
    groups: list[frozenset]              # connected components, transitive closure

    def aliases(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.pairs

    def group_of(self, rid: str) -> frozenset:
        for g in self.groups:
            if rid in g:
                return g
        return frozenset({rid})


def compute_alias_sets(regions: Sequence) -> AliasRelation:
    """Regions alias when their footprints intersect; groups close that transitively."""
    ids = [r.id for r in regions]
    pairs = set()
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, a in enumerate(regions):
        for b in regions[i + 1:]:
            if regions_alias(a, b):
                pairs.add(frozenset((a.id, b.id)))
                ra, rb = find(a.id), find(b.id)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    comps: dict[str, set] = {}
    for i in ids:
        comps.setdefault(find(i), set()).add(i)
    groups = [frozenset(c) for _, c in sorted(comps.items())]
    return AliasRelation(ids, frozenset(pairs), groups)
