"""The whole toolchain in one call: profile, decompile, optimize, partition, synthesize, measure."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .decompiler import CdfgProgram, decompile
from .errors import SynthesisError
from .isa import ProgramImage
from .partition import PartitionResult, PlatformModel, enumerate_regions, partition
from .passes import PassConfig, PassReport, run_pipeline
from .report import MetricsReport, compute_metrics
from .simulator import ExecutionResult, Profile, profile_run
from .synth import HardwareRun, ResourceSet, SynthResult, entity_name, run_with_hardware, synthesize_region


@dataclass
class FlowResult:
    image_name: str
    profile: Profile
    program: CdfgProgram
    pass_report: PassReport
    regions: list
    partition: PartitionResult
    synth: list[SynthResult] = field(default_factory=list)
    sim: ExecutionResult | None = None
    hw_run: HardwareRun | None = None
    metrics: MetricsReport | None = None

    def vhdl_files(self) -> dict[str, str]:
        """File name -> VHDL text, one file per hardware region."""
        return {f"{self.image_name}_{s.id}.vhd": s.vhdl for s in self.synth}


def optimize(image: ProgramImage, config: PassConfig | None = None) -> tuple[CdfgProgram, PassReport]:
    return run_pipeline(decompile(image), config)


def run_flow(image: ProgramImage, inputs: Iterable[int] = (), platform: PlatformModel | None = None,
             resources: ResourceSet | None = None, config: PassConfig | None = None,
             profile: Profile | None = None, image_name: str = "image",
             max_steps: int = 1_000_000) -> FlowResult:
    """Run every stage; hardware cycle counts come from simulating each region's RTL on ``inputs``."""
    inputs = list(inputs)
    platform = platform or PlatformModel()
    sim = None
    if profile is None:
        sim, profile = profile_run(image, inputs, max_steps)
    program, report = optimize(image, config)
    regions = enumerate_regions(program, profile)
    part = partition(regions, profile, platform)
    synth = [synthesize_region(program, r, resources, entity_name(image_name, r.id)) for r in part.hw_regions]
    hw = run_with_hardware(program, synth, inputs, max_steps=max_steps)
    if sim is not None and not hw.result.same_behaviour(sim):
        raise SynthesisError(f"{image_name}: hardware run disagrees with the simulator "
                             f"({hw.result.outputs} vs {sim.outputs})")
    missing = {r.id for r in part.hw_regions} - set(hw.hw_cycles)
    hw_cycles = dict(hw.hw_cycles)
    for rid in missing:
        hw_cycles[rid] = 0          # never entered on these inputs
    metrics = compute_metrics(profile, part, hw_cycles, dict(hw.invocations), platform)
    return FlowResult(image_name, profile, program, report, regions, part, synth, sim, hw, metrics)
