"""Cycle-accurate interpretation of an RtlDesign."""

from __future__ import annotations

from collections import Counter
from typing import Mapping

from ..decompiler.execute import mem_load, mem_store
from ..decompiler.ir import BINARY, MASK32, evaluate
from ..errors import MaxCyclesExceeded
from ..simulator import ExecutionResult, ExitReason
from .bind import DONE, HANDSHAKE_CYCLES, Operand, RtlDesign
from .region import RegionRun


def _read(o: Operand, regs) -> int:
    return o.imm if o.reg is None else regs[o.reg]


def run_rtl(design: RtlDesign, inputs: Mapping[int, int], memory: dict | None = None,
            max_cycles: int = 1_000_000) -> tuple[RegionRun, Counter]:
    """Run from start to done; ``memory`` (byte address -> value) is updated in place.

    Returns what software gets back and how often each block was entered.
    """
    mem = {} if memory is None else memory
    regs = {r: 0 for r in design.registers}
    for _, node, reg in design.inputs:
        regs[reg] = inputs[node] & MASK32
    cycles = 1                      # the start cycle
    visits: Counter = Counter()
    name = design.entry_state
    exit_index = None
    while name != DONE:
        if cycles >= max_cycles:
            raise MaxCyclesExceeded(f"{design.name}: no done after {max_cycles} cycles")
        st = design.state(name)
        if st.step == 0:
            visits[st.block] += 1
        cycles += 1
        new = dict(regs)
        for m in st.ops:
            args = [_read(o, regs) for o in m.srcs]
            if m.kind in BINARY:
                v = evaluate(m.kind, args[0], args[1])
            elif m.kind == "copy":
                v = args[0]
            elif m.kind == "load":
                v = mem_load(mem, args[0], m.size, m.signed)
            elif m.kind == "store":
                mem_store(mem, args[0], m.size, args[1])
                continue
            else:  # pragma: no cover - bind only emits the kinds above
                raise ValueError(m.kind)
            if m.dest is not None:
                new[m.dest] = v
        if st.edges:
            if st.cond is not None:
                c = _read(st.cond, new)
                edge = st.edges[0] if c != 0 else st.edges[1]
            else:
                edge = st.edges[0]
            vals = [(dst, regs[src.reg] if src.reg in design.phi_regs else _read(src, new))
                    for dst, src in edge.copies]
            for dst, v in vals:
                new[dst] = v
            exit_index = edge.exit_index
            name = edge.target
        else:
            name = st.next
        regs = new
    cycles += 1                     # the done cycle
    values = {node: _read(src, regs) for _, node, src in design.outputs}
    exit_edge = design.exits[exit_index] if exit_index is not None else None
    returned = {r: _read(src, regs) for _, r, src in design.returns} if design.region.whole_procedure else None
    return RegionRun(values, exit_edge, returned, cycles), visits


def simulate_rtl(design: RtlDesign, inputs: Mapping[int, int], memory: dict | None = None,
                 max_cycles: int = 1_000_000) -> tuple[ExecutionResult, int]:
    """``(result, hw_cycles)``; the result's outputs are the output ports in declaration order,
    followed by the exit index (loops) or the returned registers (procedures)."""
    run, visits = run_rtl(design, inputs, memory, max_cycles)
    outs = [run.values[n] for _, n, _ in design.outputs]
    if run.returned is not None:
        outs += [run.returned[r] for _, r, _ in design.returns]
    elif run.exit is not None:
        outs.append(design.exits.index(run.exit))
    res = ExecutionResult(tuple(outs), run.cycles, run.cycles, ExitReason.HALTED, None, dict(visits))
    return res, run.cycles


__all__ = ["run_rtl", "simulate_rtl", "HANDSHAKE_CYCLES"]
