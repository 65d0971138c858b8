"""Binding a schedule to an FSMD: states, registers, datapath micro-ops, transitions.

Timing model, shared by the RTL simulator and the VHDL emitter: a
micro-op completes in state ``issue + latency - 1`` and reads its operands
from the registers as they stood at the start of that cycle.  Branch
conditions, phi copies and values handed back to software are read after
the state's own writes, except that a phi copy whose source is itself a phi
register reads the old value (the copies act in parallel).  Start and done
each take one cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..decompiler.ir import Imm
from .region import HwRegion
from .schedule import Schedule

HANDSHAKE_CYCLES = 2
IDLE, DONE = "S_IDLE", "S_DONE"


@dataclass(frozen=True)
class Operand:
    reg: str | None = None
    imm: int | None = None

    def __str__(self):
        return self.reg if self.reg is not None else f"#{self.imm}"


@dataclass
class MicroOp:
    node: int
    kind: str
    dest: str | None
    srcs: list[Operand]
    unit: str
    instance: int
    issue: int
    size: int = 4
    signed: bool = False


@dataclass
class Edge:
    """Where control goes after a block's last state."""
    target: str                                   # state name, DONE for exits
    copies: list[tuple[str, Operand]] = field(default_factory=list)
    exit_index: int | None = None                 # index into RtlDesign.exits
    dst_block: int | None = None


@dataclass
class State:
    name: str
    block: int
    step: int
    ops: list[MicroOp] = field(default_factory=list)
    next: str | None = None                       # plain successor state
    cond: Operand | None = None                   # two-way branch on cond != 0
    edges: list[Edge] = field(default_factory=list)   # [true, false] or [only]
    returns: bool = False


@dataclass
class RtlDesign:
    name: str
    region: HwRegion
    schedule: Schedule
    states: list[State]
    registers: list[str]                          # declaration order
    phi_regs: set[str]
    reg_of: dict[int, str]                        # node id -> register
    consts: dict[int, int]                        # const node id -> value
    inputs: list[tuple[str, int, str]]            # (port, node id, register)
    outputs: list[tuple[str, int, Operand]]       # (port, node id, source)
    returns: list[tuple[str, int, Operand]]       # (port, register number, source)
    exits: list[tuple[int, int]]
    entry_state: str

    def __post_init__(self):
        self._by_name = {s.name: s for s in self.states}

    def state(self, name: str) -> State:
        return self._by_name[name]

    @property
    def datapath_states(self) -> list[State]:
        return [s for s in self.states if s.name not in (IDLE, DONE)]


def state_name(block: int, step: int) -> str:
    return f"S_B{block}_{step}"


def left_edge(intervals: list[tuple[int, int, int]]) -> dict[int, int]:
    """Pack (write step, last read step, node) intervals into registers.

    A register may be rewritten in the step its old value is last read,
    since reads see the start-of-cycle contents, but never twice in one step.
    """
    regs: list[tuple[int, int]] = []
    out = {}
    for w, u, n in sorted(intervals):
        for i, (pw, pu) in enumerate(regs):
            if w > pw and w >= pu:
                regs[i] = (w, u)
                out[n] = i
                break
        else:
            out[n] = len(regs)
            regs.append((w, u))
    return out


def bind(sched: Schedule, name: str | None = None) -> RtlDesign:
    hw = sched.region
    slots = sched.slots
    home = {op.id: b for b in hw.blocks for op in hw.ops[b]}
    consts = {op.id: op.value for op in hw.all_ops() if op.kind == "const"}
    length = {b: sched.length(b) for b in hw.blocks}

    def done_step(n):
        s = slots[n]
        return s.step + s.latency - 1

    # where each value is read: (block, step); the block length means "at the block end"
    reads: dict[int, list[tuple[int, int]]] = {}
    for b in hw.blocks:
        for op in hw.ops[b]:
            if op.kind == "phi":
                for o, p in zip(op.operands, op.preds):
                    if isinstance(o, int) and p in length:
                        reads.setdefault(o, []).append((p, length[p]))
                continue
            at = done_step(op.id) if op.id in slots else length[b]
            for o in op.operands:
                if isinstance(o, int):
                    reads.setdefault(o, []).append((b, at))

    # values living beyond one block or crossing the software boundary get their own register
    glob: set[int] = set(hw.live_ins)
    for op in hw.all_ops():
        n = op.id
        if op.kind in ("store", "branch_cond", "jump", "return", "const"):
            continue
        if op.kind == "phi" or n in hw.live_outs or any(b != home[n] for b, _ in reads.get(n, ())):
            glob.add(n)
    reg_of: dict[int, str] = {n: f"r_n{n}" for n in sorted(glob)}

    # block-local temporaries share one pool, blocks never overlap in time
    local_count = 0
    for b in hw.blocks:
        intervals = []
        for op in hw.ops[b]:
            n = op.id
            if n in glob or n not in slots or op.kind == "store" or not reads.get(n):
                continue
            intervals.append((done_step(n), max(s for _, s in reads[n]), n))
        packing = left_edge(intervals)
        for n, i in packing.items():
            reg_of[n] = f"r_t{i}"
        local_count = max(local_count, 1 + max(packing.values(), default=-1))
    phi_regs = {reg_of[op.id] for op in hw.all_ops() if op.kind == "phi"}

    def operand(o) -> Operand:
        if isinstance(o, Imm):
            return Operand(imm=o.value & 0xFFFFFFFF)
        if o in consts:
            return Operand(imm=consts[o] & 0xFFFFFFFF)
        return Operand(reg=reg_of[o])

    states: list[State] = [State(IDLE, -1, 0)]
    first = {b: state_name(b, 0) for b in hw.blocks}
    exit_index = {e: i for i, e in enumerate(hw.exits)}
    for b in hw.blocks:
        block_states = [State(state_name(b, s), b, s) for s in range(length[b])]
        for op in hw.ops[b]:
            if op.id not in slots:
                continue
            s = slots[op.id]
            dest = reg_of.get(op.id) if op.kind != "store" else None
            mop = MicroOp(op.id, op.kind, dest, [operand(o) for o in op.operands], s.unit, s.instance,
                          s.step, op.size or 4, op.signed)
            block_states[done_step(op.id)].ops.append(mop)
        for st, nxt in zip(block_states, block_states[1:]):
            st.next = nxt.name
        last = block_states[-1]
        ops = hw.ops[b]
        term = ops[-1] if ops and ops[-1].kind in ("branch_cond", "jump", "return") else None
        if term is not None and term.kind == "return":
            last.returns = True
            last.edges = [Edge(DONE)]
        else:
            succs = hw.succs[b]
            if term is not None and term.kind == "branch_cond":
                last.cond = operand(term.operands[0])
                targets = [succs[1], succs[0]] if term.negate else succs[:2]
            else:
                targets = succs[:1]
            if not targets:
                last.edges.append(Edge(DONE))
            for dst in targets:
                if dst in first:
                    copies = [(reg_of[phi.id], operand(phi.operands[phi.preds.index(b)]))
                              for phi in hw.ops[dst] if phi.kind == "phi"]
                    last.edges.append(Edge(first[dst], copies, None, dst))
                else:
                    last.edges.append(Edge(DONE, [], exit_index[(b, dst)], dst))
        states.extend(block_states)
    states.append(State(DONE, -1, 0))
    registers = [reg_of[n] for n in sorted(glob)] + [f"r_t{i}" for i in range(local_count)]
    inputs = [(f"in_n{n}", n, reg_of[n]) for n in hw.live_ins]
    outputs = [(f"out_n{n}", n, operand(n)) for n in hw.live_outs]
    returns = []
    if hw.whole_procedure:
        ret = next((op for op in hw.all_ops() if op.kind == "return"), None)
        if ret is not None:
            returns = [(f"ret_r{r}", r, operand(o)) for r, o in zip(hw.returns, ret.operands)]
    return RtlDesign(name or hw.id, hw, sched, states, registers, phi_regs, reg_of, consts,
                     inputs, outputs, returns, list(hw.exits), first[hw.entry])
