"""Resource-constrained list scheduling, one basic block at a time."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import NoFeasibleImpl
from .region import HwRegion
from .resources import ResourceSet, unit_class


@dataclass(frozen=True)
class Slot:
    step: int
    unit: str
    instance: int
    latency: int

    @property
    def done(self) -> int:
        """First step at which the result can be used."""
        return self.step + self.latency


@dataclass
class BlockSchedule:
    block: int
    slots: dict[int, Slot]
    length: int


@dataclass
class Schedule:
    region: HwRegion
    resources: ResourceSet
    blocks: dict[int, BlockSchedule] = field(default_factory=dict)

    @property
    def slots(self) -> dict[int, Slot]:
        return {n: s for b in self.blocks.values() for n, s in b.slots.items()}

    def length(self, block: int) -> int:
        return self.blocks[block].length

    @property
    def total_steps(self) -> int:
        return sum(b.length for b in self.blocks.values())

    def dump(self) -> str:
        lines = []
        for b in self.region.blocks:
            bs = self.blocks[b]
            lines.append(f"# block {b} steps {bs.length}")
            for n, s in sorted(bs.slots.items(), key=lambda kv: (kv[1].step, kv[1].unit, kv[1].instance, kv[0])):
                lines.append(f"step {s.step}: {n}@{s.unit}#{s.instance}")
        return "\n".join(lines) + "\n"


def block_dag(hw: HwRegion, block: int, resources: ResourceSet):
    """Schedulable ops of ``block`` with their in-block predecessors and latencies."""
    ops = [op for op in hw.ops[block] if unit_class(op.kind)]
    ids = {op.id for op in ops}
    preds = {op.id: sorted({o for o in op.operands if isinstance(o, int) and o in ids}) for op in ops}
    for a, b in hw.mem_edges:
        if a in ids and b in ids and a not in preds[b]:
            preds[b].append(a)
    lat = {op.id: resources.op_latency(op.kind) for op in ops}
    return ops, preds, lat


def critical_path(ops, preds, lat) -> dict[int, int]:
    """Longest latency path from each op to the end of the block, the op included."""
    succs: dict[int, list[int]] = {op.id: [] for op in ops}
    for n, ps in preds.items():
        for p in ps:
            succs[p].append(n)
    prio: dict[int, int] = {}
    for op in reversed(ops):                 # block order is topological
        prio[op.id] = lat[op.id] + max((prio[s] for s in succs[op.id]), default=0)
    return prio


def schedule_block(hw: HwRegion, block: int, resources: ResourceSet) -> BlockSchedule:
    ops, preds, lat = block_dag(hw, block, resources)
    kind = {op.id: op.kind for op in ops}
    for op in ops:
        if resources.count(unit_class(op.kind)) == 0:
            raise NoFeasibleImpl(f"node {op.id} ({op.kind}) needs a {unit_class(op.kind)} and none is available")
    prio = critical_path(ops, preds, lat)
    busy: dict[str, list[int]] = {}
    slots: dict[int, Slot] = {}
    left = [op.id for op in ops]
    step = 0
    while left:
        ready = [n for n in left if all(p in slots and slots[p].done <= step for p in preds[n])]
        ready.sort(key=lambda n: (-prio[n], n))
        for n in ready:
            cls = unit_class(kind[n])
            units = busy.setdefault(cls, [0] * resources.count(cls))
            free = [i for i, t in enumerate(units) if t <= step]
            if not free:
                continue
            i = free[0]
            units[i] = step + lat[n]
            slots[n] = Slot(step, cls, i, lat[n])
        left = [n for n in left if n not in slots]
        step += 1
    length = max((s.done for s in slots.values()), default=0)
    return BlockSchedule(block, slots, max(1, length))


def schedule(hw: HwRegion, resources: ResourceSet | None = None) -> Schedule:
    """List-schedule every block; priority is the critical path, ties go to the lower node id."""
    resources = resources or ResourceSet()
    out = Schedule(hw, resources)
    for b in hw.blocks:
        out.blocks[b] = schedule_block(hw, b, resources)
    return out


def check_schedule(sched: Schedule) -> list[str]:
    """Independent re-check of dependences, memory order and unit counts."""
    problems = []
    hw, res = sched.region, sched.resources
    for b in hw.blocks:
        ops, preds, lat = block_dag(hw, b, res)
        bs = sched.blocks[b]
        for op in ops:
            s = bs.slots.get(op.id)
            if s is None:
                problems.append(f"node {op.id} unscheduled")
                continue
            if s.unit != unit_class(op.kind) or s.latency != lat[op.id]:
                problems.append(f"node {op.id} on wrong unit")
            for p in preds[op.id]:
                if bs.slots[p].step + lat[p] > s.step:
                    problems.append(f"node {op.id} starts before {p} finishes")
            if s.done > bs.length:
                problems.append(f"node {op.id} runs past the block end")
        for step in range(bs.length):
            used: dict[str, set[int]] = {}
            for n, s in bs.slots.items():
                if s.step <= step < s.done:
                    inst = used.setdefault(s.unit, set())
                    if s.instance in inst:
                        problems.append(f"step {step}: {s.unit}#{s.instance} double booked")
                    inst.add(s.instance)
            for cls, inst in used.items():
                if len(inst) > res.count(cls) or any(i >= res.count(cls) for i in inst):
                    problems.append(f"step {step}: too many {cls} units")
    return problems
