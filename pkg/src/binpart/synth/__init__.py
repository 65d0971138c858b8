"""Behavioral synthesis: strength decision, list scheduling, FSMD binding, VHDL, RTL simulation."""

from .bind import DONE, HANDSHAKE_CYCLES, IDLE, Edge, MicroOp, Operand, RtlDesign, State, bind, left_edge
from .driver import HardwareRun, SynthResult, entity_name, hardware_hooks, run_with_hardware, synthesize_region
from .region import HwRegion, RegionRun, cut_region, cut_single, execute_region, extract_region
from .resources import CLASSES, ResourceSet, unit_class
from .rtlsim import run_rtl, simulate_rtl
from .schedule import BlockSchedule, Schedule, Slot, check_schedule, critical_path, schedule, schedule_block
from .strength import USE_MULTIPLIER, USE_SHIFT_ADD, apply_decisions, decide_all, decide_multiplier_impl
from .vhdl import check_vhdl, emit_vhdl, vhdl_name

__all__ = [
    "DONE", "HANDSHAKE_CYCLES", "IDLE", "Edge", "MicroOp", "Operand", "RtlDesign", "State", "bind", "left_edge",
    "HardwareRun", "SynthResult", "entity_name", "hardware_hooks", "run_with_hardware", "synthesize_region",
    "HwRegion", "RegionRun", "cut_region", "cut_single", "execute_region", "extract_region",
    "CLASSES", "ResourceSet", "unit_class", "run_rtl", "simulate_rtl",
    "BlockSchedule", "Schedule", "Slot", "check_schedule", "critical_path", "schedule", "schedule_block",
    "USE_MULTIPLIER", "USE_SHIFT_ADD", "apply_decisions", "decide_all", "decide_multiplier_impl",
    "check_vhdl", "emit_vhdl", "vhdl_name",
]
