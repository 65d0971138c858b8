"""Region synthesis end to end, and running a program with its regions in hardware."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..decompiler.cdfg import CdfgProgram
from ..decompiler.execute import execute_cdfg
from ..simulator import ExecutionResult
from .bind import RtlDesign, bind
from .region import HwRegion, extract_region
from .resources import ResourceSet
from .rtlsim import run_rtl
from .schedule import Schedule, check_schedule, schedule
from .strength import apply_decisions, decide_all
from .vhdl import check_vhdl, emit_vhdl, vhdl_name


@dataclass
class SynthResult:
    region: object                  # the partitioner's Region
    hw: HwRegion                    # after the multiplier decisions
    decisions: dict[int, str]
    schedule: Schedule
    design: RtlDesign
    vhdl: str

    @property
    def id(self) -> str:
        return self.region.id


def synthesize_region(program: CdfgProgram, region, resources: ResourceSet | None = None,
                      entity: str | None = None) -> SynthResult:
    resources = resources or ResourceSet()
    hw = extract_region(program, region)
    decisions = decide_all(hw, resources)
    hw2 = apply_decisions(hw, decisions)
    sched = schedule(hw2, resources)
    problems = check_schedule(sched)
    assert not problems, problems
    design = bind(sched, entity or region.id)
    text = emit_vhdl(design, entity)
    problems = check_vhdl(text)
    assert not problems, problems
    return SynthResult(region, hw2, decisions, sched, design, text)


def entity_name(image_name: str, region_id: str) -> str:
    return vhdl_name(f"{image_name}_{region_id}")


@dataclass
class HardwareRun:
    result: ExecutionResult
    hw_cycles: Counter = field(default_factory=Counter)      # region id -> total cycles
    invocations: Counter = field(default_factory=Counter)    # region id -> runs


def hardware_hooks(results: Iterable[SynthResult], run: HardwareRun, max_cycles: int = 1_000_000):
    """CDFG executor hooks that hand each region's entry to its RTL simulation."""
    hooks = {}
    for sr in results:
        def hook(machine, g, vals, prev, sr=sr):
            d = sr.design
            if not d.region.whole_procedure and prev in d.region.blocks:
                return None         # a back edge, software is inside the loop already
            rr, _ = run_rtl(d, {k: vals[k] for k in d.region.live_ins}, machine.mem, max_cycles)
            run.hw_cycles[sr.id] += rr.cycles
            run.invocations[sr.id] += 1
            vals.update(rr.values)
            if rr.returned is not None:
                return ("return", rr.returned)
            return rr.exit
        hooks[(sr.design.region.proc, sr.design.region.entry)] = hook
    return hooks


def run_with_hardware(program: CdfgProgram, results: Iterable[SynthResult], inputs: Iterable[int] = (),
                      memory: Mapping[int, int] | None = None, max_steps: int = 1_000_000) -> HardwareRun:
    """Execute the program with every synthesized region simulated at the RTL level."""
    run = HardwareRun(None)
    hooks = hardware_hooks(list(results), run)
    run.result = execute_cdfg(program, inputs, memory, max_steps, hooks=hooks)
    return run
