"""The three-step 90-10 partitioner.

1. Hot loops by descending cycles while the selection covers under 90% of
   execution and the loop fits the area left.
2. Alias partners of each selected region, if space allows, so data the
   kernel shares can move into FPGA memory with it.
3. Everything else by descending ``cycles * suitability`` until the first
   region that does not fit (or skipping it, when asked to).

Regions with zero suitability (calls, I/O, fragmented glue code) are
never moved to hardware.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import EmptyProfile
from .alias import AliasRelation, compute_alias_sets
from .platform import PlatformModel

HOT_FRACTION = 0.9


@dataclass
class PartitionResult:
    hw_regions: list = field(default_factory=list)
    sw_blocks: list = field(default_factory=list)
    total_area: int = 0
    rationale: dict[str, str] = field(default_factory=dict)   # region id -> Step1Hot | Step2Alias | Step3Greedy
    violations: list[str] = field(default_factory=list)
    total_cycles: int = 0
    capacity: float = 0

    @property
    def hw_ids(self) -> list[str]:
        return [r.id for r in self.hw_regions]

    @property
    def hw_cycles_sw(self) -> int:
        """Software cycles the hardware regions used to take."""
        return sum(r.cycles for r in self.hw_regions)

    @property
    def sw_cycles(self) -> int:
        return self.total_cycles - self.hw_cycles_sw

    def to_text(self) -> str:
        lines = [f"hw {r.id} {self.rationale[r.id]} {r.cycles} {r.est_area}" for r in self.hw_regions]
        lines.append(f"sw-cycles {self.sw_cycles}")
        lines.append(f"total-gates {self.total_area}")
        return "\n".join(lines) + "\n"


def _tie(r):
    return (r.est_area, r.address, r.id)


def partition(regions: Sequence, profile, platform: PlatformModel,
              alias: AliasRelation | None = None, skip_and_continue: bool = False) -> PartitionResult:
    """Choose hardware regions; ``profile`` is a Profile or a total cycle count."""
    total = profile if isinstance(profile, int) else profile.total_cycles
    if total <= 0:
        raise EmptyProfile("profile has no executed cycles")
    cap = platform.area_capacity_gates
    alias = alias or compute_alias_sets(regions)
    by_id = {r.id: r for r in regions}
    res = PartitionResult(total_cycles=total, capacity=cap)
    chosen: list = []
    used = 0

    def fits(r) -> bool:
        return used + r.est_area <= cap

    def eligible(r) -> bool:
        return r.suitability > 0 and r.id not in res.rationale and not any(r.overlaps(c) for c in chosen)

    def take(r, tag):
        nonlocal used
        chosen.append(r)
        used += r.est_area
        res.rationale[r.id] = tag

    # Step 1: the most frequent loops, up to 90% of execution
    covered = 0
    loops = sorted((r for r in regions if r.kind == "Loop"), key=lambda r: (-r.cycles, *_tie(r)))
    for r in loops:
        if covered >= HOT_FRACTION * total:
            break
        if eligible(r) and fits(r):
            take(r, "Step1Hot")
            covered += r.cycles

    # Step 2: regions sharing memory with a selected one
    for sel in list(chosen):
        partners = [by_id[i] for i in alias.group_of(sel.id) if i != sel.id]
        for r in sorted(partners, key=lambda r: (-r.cycles, *_tie(r))):
            if eligible(r) and fits(r):
                take(r, "Step2Alias")

    # Step 3: greedy by profile weight times suitability
    rest = [r for r in regions if eligible(r)]
    for r in sorted(rest, key=lambda r: (-(r.cycles * r.suitability), *_tie(r))):
        if not eligible(r):
            continue            # nested inside something chosen in this step
        if fits(r):
            take(r, "Step3Greedy")
        elif not skip_and_continue:
            break

    res.hw_regions = chosen
    res.total_area = used
    hw_blocks = {(r.proc, b) for r in chosen for b in r.blocks}
    res.sw_blocks = sorted({(r.proc, b) for r in regions for b in r.blocks} - hw_blocks)
    if used > cap:       # cannot happen; kept as a loud self-check
        res.violations.append(f"area {used} exceeds capacity {cap}")
    return res
