"""Reference interpreter and profiler for program images.

The interpreter is the semantic oracle for every later stage.  I/O goes
through SYSCALL: ``$2 == 1`` prints ``$4``, ``$2 == 5`` reads the next
input word into ``$2`` and ``$2 == 10`` halts.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import (
    BadSyscall,
    UnknownOpcode,
    InputExhausted,
    PcOutOfRange,
    SimulationError,
    UnalignedAccess,
)
from .isa import MASK32, Instruction, ProgramImage, decode, to_signed32

STACK_TOP = 0x7FFFF000
DEFAULT_COSTS: dict[str, int] = {"MUL": 3, "LW": 2, "SW": 2}


def cycle_cost(mnemonic: str, costs: Mapping[str, int] | None = None) -> int:
    costs = DEFAULT_COSTS if costs is None else costs
    return costs.get(mnemonic, costs.get("default", 1))


class ExitReason(enum.Enum):
    HALTED = "halted"
    MAX_STEPS = "max_steps"
    FAULT = "fault"


@dataclass
class ExecutionResult:
    outputs: tuple[int, ...]
    total_cycles: int
    steps: int
    exit_reason: ExitReason
    fault: str | None = None
    block_visits: dict = field(default_factory=dict, compare=False)

    def same_behaviour(self, other: "ExecutionResult") -> bool:
        """Outputs and termination agree (cycle counts and fault wording may differ)."""
        return self.outputs == other.outputs and self.exit_reason == other.exit_reason


@dataclass
class MachineState:
    regs: list[int]
    pc: int
    mem: dict[int, int]
    halted: bool = False
    output_log: list[int] = field(default_factory=list)
    input_queue: list[int] = field(default_factory=list)


def initial_memory(image: ProgramImage) -> dict[int, int]:
    """Byte-addressed memory holding the text and data sections."""
    mem: dict[int, int] = {}
    for i, w in enumerate(image.text):
        base = image.text_base + 4 * i
        for k in range(4):
            mem[base + k] = (w >> (8 * k)) & 0xFF
    for i, b in enumerate(image.data):
        mem[image.data_base + i] = b
    return mem


def initial_registers() -> list[int]:
    regs = [0] * 32
    regs[29] = STACK_TOP
    return regs


def initial_state(image: ProgramImage, inputs: Iterable[int] = ()) -> MachineState:
    return MachineState(initial_registers(), image.entry, initial_memory(image),
                        input_queue=[v & MASK32 for v in inputs])


def load_word(mem: Mapping[int, int], addr: int) -> int:
    if addr & 3:
        raise UnalignedAccess(f"unaligned word load at 0x{addr:08x}")
    return sum(mem.get(addr + k, 0) << (8 * k) for k in range(4))


def store_word(mem: dict[int, int], addr: int, value: int) -> None:
    if addr & 3:
        raise UnalignedAccess(f"unaligned word store at 0x{addr:08x}")
    for k in range(4):
        mem[addr + k] = (value >> (8 * k)) & 0xFF


def _execute(inst: Instruction, st: MachineState) -> None:
    r = st.regs
    m = inst.mnemonic
    nxt = (st.pc + 4) & MASK32

    def setr(i, v):
        if i:
            r[i] = v & MASK32

    if m == "NOP":
        pass
    elif m in ("ADD", "ADDU"):
        setr(inst.rd, r[inst.rs] + r[inst.rt])
    elif m in ("SUB", "SUBU"):
        setr(inst.rd, r[inst.rs] - r[inst.rt])
    elif m == "MUL":
        setr(inst.rd, r[inst.rs] * r[inst.rt])
    elif m == "AND":
        setr(inst.rd, r[inst.rs] & r[inst.rt])
    elif m == "OR":
        setr(inst.rd, r[inst.rs] | r[inst.rt])
    elif m == "XOR":
        setr(inst.rd, r[inst.rs] ^ r[inst.rt])
    elif m == "NOR":
        setr(inst.rd, ~(r[inst.rs] | r[inst.rt]))
    elif m == "SLT":
        setr(inst.rd, int(to_signed32(r[inst.rs]) < to_signed32(r[inst.rt])))
    elif m == "SLTU":
        setr(inst.rd, int(r[inst.rs] < r[inst.rt]))
    elif m == "SLL":
        setr(inst.rd, r[inst.rt] << inst.shamt)
    elif m == "SRL":
        setr(inst.rd, r[inst.rt] >> inst.shamt)
    elif m == "SRA":
        setr(inst.rd, to_signed32(r[inst.rt]) >> inst.shamt)
    elif m == "SLLV":
        setr(inst.rd, r[inst.rt] << (r[inst.rs] & 31))
    elif m == "SRLV":
        setr(inst.rd, r[inst.rt] >> (r[inst.rs] & 31))
    elif m == "SRAV":
        setr(inst.rd, to_signed32(r[inst.rt]) >> (r[inst.rs] & 31))
    elif m in ("ADDI", "ADDIU"):
        setr(inst.rt, r[inst.rs] + inst.imm)
    elif m == "SLTI":
        setr(inst.rt, int(to_signed32(r[inst.rs]) < inst.imm))
    elif m == "ANDI":
        setr(inst.rt, r[inst.rs] & inst.imm)
    elif m == "ORI":
        setr(inst.rt, r[inst.rs] | inst.imm)
    elif m == "XORI":
        setr(inst.rt, r[inst.rs] ^ inst.imm)
    elif m == "LUI":
        setr(inst.rt, inst.imm << 16)
    elif m == "LW":
        setr(inst.rt, load_word(st.mem, (r[inst.rs] + inst.imm) & MASK32))
    elif m in ("LB", "LBU"):
        b = st.mem.get((r[inst.rs] + inst.imm) & MASK32, 0)
        setr(inst.rt, b - 256 if m == "LB" and b & 0x80 else b)
    elif m == "SW":
        store_word(st.mem, (r[inst.rs] + inst.imm) & MASK32, r[inst.rt])
    elif m == "SB":
        st.mem[(r[inst.rs] + inst.imm) & MASK32] = r[inst.rt] & 0xFF
    elif m in ("BEQ", "BNE", "BLEZ", "BGTZ"):
        a = r[inst.rs]
        if m == "BEQ":
            taken = a == r[inst.rt]
        elif m == "BNE":
            taken = a != r[inst.rt]
        elif m == "BLEZ":
            taken = to_signed32(a) <= 0
        else:
            taken = to_signed32(a) > 0
        if taken:
            nxt = inst.branch_target()
    elif m == "J":
        nxt = inst.branch_target()
    elif m == "JAL":
        r[31] = nxt
        nxt = inst.branch_target()
    elif m == "JR":
        nxt = r[inst.rs]
    elif m == "SYSCALL":
        service = r[2]
        if service == 1:
            st.output_log.append(r[4])
        elif service == 5:
            if not st.input_queue:
                raise InputExhausted(f"read at 0x{st.pc:08x} with no input left")
            r[2] = st.input_queue.pop(0)
        elif service == 10:
            st.halted = True
            return
        else:
            raise BadSyscall(f"unknown syscall service {service} at 0x{st.pc:08x}")
    else:  # pragma: no cover - decode guarantees the set above
        raise SimulationError(f"unimplemented {m}")
    st.pc = nxt


def step(state: MachineState, image: ProgramImage) -> MachineState:
    """Execute one instruction in place and return the same state object."""
    if state.halted:
        raise SimulationError("machine is halted")
    if not image.in_text(state.pc):
        raise PcOutOfRange(f"pc 0x{state.pc:08x} outside text")
    _execute(decode(image.word_at(state.pc), state.pc), state)
    return state


@dataclass
class Profile:
    block_counts: Counter = field(default_factory=Counter)
    edge_counts: Counter = field(default_factory=Counter)
    instr_cycles: Counter = field(default_factory=Counter)
    total_cycles: int = 0

    def cycles_in(self, addresses: Iterable[int]) -> int:
        return sum(self.instr_cycles.get(a, 0) for a in addresses)

    def to_text(self) -> str:
        lines = [f"block {a:08x} {c}" for a, c in sorted(self.block_counts.items())]
        lines += [f"edge {s:08x} {d:08x} {c}" for (s, d), c in sorted(self.edge_counts.items())]
        lines += [f"instr {a:08x} {c}" for a, c in sorted(self.instr_cycles.items())]
        lines.append(f"cycles {self.total_cycles}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Profile":
        p = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                if parts[0] == "block":
                    p.block_counts[int(parts[1], 16)] = int(parts[2])
                elif parts[0] == "edge":
                    p.edge_counts[(int(parts[1], 16), int(parts[2], 16))] = int(parts[3])
                elif parts[0] == "instr":
                    p.instr_cycles[int(parts[1], 16)] = int(parts[2])
                elif parts[0] == "cycles":
                    p.total_cycles = int(parts[1])
                else:
                    raise ValueError(parts[0])
            except (IndexError, ValueError):
                raise ValueError(f"profile line {lineno}: cannot parse {line!r}") from None
        return p


def _predecode(image: ProgramImage) -> dict[int, Instruction]:
    return image.instructions()


def _run(image, inputs, max_steps, costs, leaders):
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    st = initial_state(image, inputs)
    insts = _predecode(image)
    prof = Profile() if leaders is not None else None
    cur_block = None
    jumped = False
    steps = cycles = 0
    reason, fault = ExitReason.MAX_STEPS, None
    try:
        while steps < max_steps:
            pc = st.pc
            inst = insts.get(pc) if image.in_text(pc) else None
            if inst is None:
                if not image.in_text(pc):
                    raise PcOutOfRange(f"pc 0x{pc:08x} outside text")
                inst = decode(image.word_at(pc), pc)
            if prof is not None:
                if jumped and pc not in leaders:
                    leaders.add(pc)   # target of an indirect jump
                if pc in leaders:
                    prof.block_counts[pc] += 1
                    if cur_block is not None:
                        prof.edge_counts[(cur_block, pc)] += 1
                    cur_block = pc
            _execute(inst, st)
            cost = cycle_cost(inst.mnemonic, costs)
            steps += 1
            cycles += cost
            if prof is not None:
                prof.instr_cycles[pc] += cost
                jumped = inst.mnemonic == "JR"
            if st.halted:
                reason = ExitReason.HALTED
                break
    except (SimulationError, UnknownOpcode) as exc:
        reason, fault = ExitReason.FAULT, f"{type(exc).__name__}: {exc}"
    if prof is not None:
        prof.total_cycles = cycles
    result = ExecutionResult(tuple(st.output_log), cycles, steps, reason, fault)
    return result, prof


def run(image: ProgramImage, inputs: Iterable[int] = (), max_steps: int = 1_000_000,
        costs: Mapping[str, int] | None = None) -> ExecutionResult:
    result, _ = _run(image, list(inputs), max_steps, costs, None)
    return result


def profile_run(image: ProgramImage, inputs: Iterable[int] = (), max_steps: int = 1_000_000,
                costs: Mapping[str, int] | None = None) -> tuple[ExecutionResult, Profile]:
    """Run while counting block entries, block-to-block transfers and cycles."""
    from .decompiler.cfg import find_leaders

    result, prof = _run(image, list(inputs), max_steps, costs, set(find_leaders(image)))
    return result, prof


def read_inputs(text: str) -> list[int]:
    return [int(line.split("#", 1)[0]) & MASK32 for line in text.splitlines()
            if line.split("#", 1)[0].strip()]
