"""Reference executor for CDFGs: the oracle every later stage is checked against."""

from __future__ import annotations

import sys
from collections import Counter
from typing import Callable, Iterable, Mapping

from ..errors import CdfgExecutionError, InputExhausted, MemoryFault, SimulationError
from ..simulator import ExecutionResult, ExitReason, initial_memory, initial_registers
from .cdfg import Cdfg, CdfgProgram
from .ir import BINARY, MASK32, Imm, IrOp, evaluate, mask

Hook = Callable[["CdfgMachine", Cdfg, dict, int], "tuple[int, int] | None"]


class _Halt(Exception):
    pass


class _OutOfSteps(Exception):
    pass


def mem_load(mem, addr: int, size: int, signed: bool) -> int:
    if size == 4:
        if addr & 3:
            raise MemoryFault(f"unaligned word load at 0x{addr:08x}")
        return sum(mem.get(addr + k, 0) << (8 * k) for k in range(4))
    b = mem.get(addr, 0)
    return (b - 256) & MASK32 if signed and b & 0x80 else b


def mem_store(mem, addr: int, size: int, value: int) -> None:
    if size == 4:
        if addr & 3:
            raise MemoryFault(f"unaligned word store at 0x{addr:08x}")
        for k in range(4):
            mem[addr + k] = (value >> (8 * k)) & 0xFF
    else:
        mem[addr] = value & 0xFF


class CdfgMachine:
    """Interpreter state shared by all procedure activations of one run.

    ``masked`` truncates every node result to its annotated width, which
    checks that width annotations are sound.  ``hooks`` maps
    ``(procedure entry address, block id)`` to a callable that may run a
    region elsewhere (hardware) and report the edge control leaves it by,
    or ``("return", {reg: value})`` when it ran the whole procedure.
    """

    def __init__(self, program: CdfgProgram, inputs: Iterable[int] = (),
                 memory: Mapping[int, int] | None = None, max_steps: int = 1_000_000,
                 masked: bool = False, hooks: Mapping[tuple[int, int], Hook] | None = None):
        self.program = program
        self.inputs = [v & MASK32 for v in inputs]
        if memory is None:
            memory = initial_memory(program.image) if program.image is not None else {}
        self.mem = dict(memory)
        self.max_steps = max_steps
        self.masked = masked
        self.hooks = dict(hooks or {})
        self.outputs: list[int] = []
        self.steps = 0
        self.block_visits: Counter = Counter()
        self.edge_visits: Counter = Counter()

    # single op --------------------------------------------------------------
    def eval_op(self, op: IrOp, vals: dict) -> int | None:
        k = op.kind

        def get(o):
            return o.value & MASK32 if isinstance(o, Imm) else vals[o]

        if k in BINARY:
            v = evaluate(k, get(op.operands[0]), get(op.operands[1]))
        elif k == "const":
            v = op.value & MASK32
        elif k == "copy":
            v = get(op.operands[0])
        elif k == "load":
            v = mem_load(self.mem, get(op.operands[0]), op.size or 4, op.signed)
        elif k == "store":
            mem_store(self.mem, get(op.operands[0]), op.size or 4, get(op.operands[1]))
            return None
        elif k == "input":
            if not self.inputs:
                raise InputExhausted("input requested with none left")
            v = self.inputs.pop(0)
        elif k == "output":
            self.outputs.append(get(op.operands[0]))
            return None
        elif k == "halt":
            raise _Halt()
        else:
            raise CdfgExecutionError(f"cannot evaluate {k} node {op.id}")
        if self.masked and op.width < 32:
            v &= mask(op.width)
        return v

    def _tick(self):
        self.steps += 1
        if self.steps > self.max_steps:
            raise _OutOfSteps()

    # control ----------------------------------------------------------------
    def run_blocks(self, g: Cdfg, vals: dict, block: int, prev: int | None,
                   region: frozenset | None = None):
        """Execute from ``block`` (entered from ``prev``).

        Returns ``("return", {reg: value})`` or, when ``region`` is given and
        control leaves it, ``("exit", src, dst)``.
        """
        b, first = block, True
        while True:
            if region is not None and not first and b not in region:
                return ("exit", prev, b)
            blk = g.blocks[b]
            if prev is not None:
                pending = {}
                for phi in blk.ops:
                    if phi.kind != "phi":
                        break
                    o = phi.operands[phi.preds.index(prev)]
                    v = o.value & MASK32 if isinstance(o, Imm) else vals[o]
                    if self.masked and phi.width < 32:
                        v &= mask(phi.width)
                    pending[phi.id] = v
                vals.update(pending)
                self.edge_visits[(g.entry_addr, prev, b)] += 1
            self.block_visits[(g.entry_addr, b)] += 1
            hook = self.hooks.get((g.entry_addr, b)) if (region is None or not first) else None
            first = False
            if hook is not None:
                res = hook(self, g, vals, prev)
                if res is not None:
                    if res[0] == "return":
                        return res
                    prev, b = res
                    continue
            nxt = None
            results = None
            for op in blk.ops:
                k = op.kind
                if k in ("phi", "param"):
                    continue
                self._tick()
                if k == "branch_cond":
                    o = op.operands[0]
                    c = (o.value & MASK32) if isinstance(o, Imm) else vals[o]
                    taken = (c != 0) != op.negate
                    nxt = blk.succs[0] if taken else blk.succs[1]
                elif k == "jump":
                    if op.operands:
                        raise CdfgExecutionError(f"indirect jump at 0x{op.origin:08x}")
                    nxt = blk.succs[0]
                elif k == "return":
                    return ("return", {r: (o.value & MASK32 if isinstance(o, Imm) else vals[o])
                                       for r, o in zip(g.returns, op.operands)})
                elif k == "call":
                    results = self.call(op, vals)
                elif k == "proj":
                    vals[op.id] = results[op.reg]
                else:
                    v = self.eval_op(op, vals)
                    if v is not None:
                        vals[op.id] = v
            if nxt is None:
                if not blk.succs:
                    raise CdfgExecutionError(f"{g.name}: block {b} has no successor")
                nxt = blk.succs[0]
            prev, b = b, nxt

    def call(self, op: IrOp, vals: dict) -> dict[int, int]:
        callee = self.program.procedures.get(op.callee)
        if callee is None:
            err = self.program.failed.get(op.callee)
            raise CdfgExecutionError(f"call to undecompiled procedure 0x{op.callee:08x}: {err}")
        args = {r: (o.value & MASK32 if isinstance(o, Imm) else vals[o])
                for r, o in zip(op.anno.get("args", ()), op.operands)}
        return self.invoke(callee, args)

    def invoke(self, g: Cdfg, args: Mapping[int, int]) -> dict[int, int]:
        vals = {pid: args.get(r, 0) & MASK32 for r, pid in g.params.items()}
        _, results = self.run_blocks(g, vals, g.entry, None)
        return results


def execute_cdfg(program: CdfgProgram, inputs: Iterable[int] = (), memory: Mapping[int, int] | None = None,
                 max_steps: int = 1_000_000, masked: bool = False, hooks=None) -> ExecutionResult:
    """Run the program from its entry procedure with the machine's initial registers."""
    m = CdfgMachine(program, inputs, memory, max_steps, masked, hooks)
    regs = initial_registers()
    reason, fault = ExitReason.MAX_STEPS, None
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        m.invoke(program.main, {r: regs[r] for r in range(32)})
        reason = ExitReason.FAULT
        fault = "CdfgExecutionError: entry procedure returned"
    except _Halt:
        reason = ExitReason.HALTED
    except _OutOfSteps:
        m.steps = max_steps
        reason = ExitReason.MAX_STEPS
    except (SimulationError, CdfgExecutionError) as exc:
        reason, fault = ExitReason.FAULT, f"{type(exc).__name__}: {exc}"
    finally:
        sys.setrecursionlimit(limit)
    return ExecutionResult(tuple(m.outputs), m.steps, m.steps, reason, fault, dict(m.block_visits))
