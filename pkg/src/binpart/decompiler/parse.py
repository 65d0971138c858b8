"""Binary parsing: machine instructions to register-symbolic linear IR."""

from __future__ import annotations

import itertools

from ..errors import UnresolvedSyscall
from ..isa import (
    BRANCHES,
    LOADS,
    STORES,
    Instruction,
    ProgramImage,
    decode,
)
from .ir import MASK32, Imm, IrOp, Reg, evaluate

SYS_PRINT, SYS_READ, SYS_EXIT = 1, 5, 10

_BINOP = {
    "ADD": "add", "ADDU": "add", "SUB": "sub", "SUBU": "sub",
    "AND": "and", "OR": "or", "XOR": "xor", "NOR": "nor",
    "SLT": "slt", "SLTU": "sltu", "MUL": "mul",
    "SLLV": "shl", "SRLV": "lshr", "SRAV": "ashr",
    "SLL": "shl", "SRL": "lshr", "SRA": "ashr",
    "ADDI": "add", "ADDIU": "add", "SLTI": "slt",
    "ANDI": "and", "ORI": "or", "XORI": "xor",
}


def static_targets(insts: dict[int, Instruction]) -> set[int]:
    """Every direct branch/jump target in the text (a superset of leaders)."""
    out = set()
    for inst in insts.values():
        if inst.mnemonic in BRANCHES or inst.mnemonic in ("J", "JAL"):
            out.add(inst.branch_target())
    return out


def syscall_service(insts: dict[int, Instruction], address: int, targets: set[int]) -> int:
    """Service number in $2 at a SYSCALL, found by a straight-line backward scan.

    The scan stops at control transfers and at branch targets, so the
    answer holds on every path reaching the syscall.
    """
    addr = address
    while True:
        if addr in targets:
            break
        addr -= 4
        inst = insts.get(addr)
        if inst is None or inst.is_control or inst.mnemonic == "SYSCALL":
            break
        if inst.dest_register() != 2:
            continue
        if inst.mnemonic in ("ADDI", "ADDIU", "ORI", "XORI") and inst.rs == 0:
            return inst.imm & MASK32
        break
    raise UnresolvedSyscall(address)


class _Lowering:
    def __init__(self, start_id: int = 0):
        self.ids = itertools.count(start_id)

    def op(self, kind, operands=(), origin=0, **kw) -> IrOp:
        return IrOp(next(self.ids), kind, list(operands), origin=origin, **kw)


def _src(r: int):
    return Imm(0) if r == 0 else Reg(r)


def lower(inst: Instruction, service: int | None = None, low: _Lowering | None = None) -> list[IrOp]:
    """Lower one instruction to 0-2 IR ops (NOP and writes to $0 lower to nothing)."""
    low = low or _Lowering()
    m = inst.mnemonic
    pc = inst.address
    op = lambda kind, operands=(), **kw: low.op(kind, operands, origin=pc, **kw)  # noqa: E731

    if m == "NOP":
        return []
    if m in _BINOP:
        if m in ("SLL", "SRL", "SRA"):
            a, b = _src(inst.rt), Imm(inst.shamt)
            dest = inst.rd
        elif m in ("SLLV", "SRLV", "SRAV"):
            a, b = _src(inst.rt), _src(inst.rs)
            dest = inst.rd
        elif inst.rd is not None:
            a, b = _src(inst.rs), _src(inst.rt)
            dest = inst.rd
        else:
            a, b = _src(inst.rs), Imm(inst.imm & MASK32)
            dest = inst.rt
        if dest == 0:
            return []
        kind = _BINOP[m]
        if isinstance(a, Imm) and isinstance(b, Imm):
            return [op("const", value=evaluate(kind, a.value, b.value), dest=Reg(dest))]
        return [op(kind, [a, b], dest=Reg(dest))]
    if m == "LUI":
        if inst.rt == 0:
            return []
        return [op("const", value=(inst.imm << 16) & MASK32, dest=Reg(inst.rt))]
    if m in LOADS or m in STORES:
        ops = []
        if inst.rs == 0:
            addr = Imm(inst.imm & MASK32)
        elif inst.imm == 0:
            addr = Reg(inst.rs)
        else:
            a = op("add", [Reg(inst.rs), Imm(inst.imm & MASK32)])
            ops.append(a)
            addr = a.id
        size = 1 if m in ("LB", "LBU", "SB") else 4
        if m in LOADS:
            dest = Reg(inst.rt) if inst.rt else None
            ops.append(op("load", [addr], size=size, signed=(m == "LB"), dest=dest))
        else:
            ops.append(op("store", [addr, _src(inst.rt)], size=size))
        return ops
    if m in ("BEQ", "BNE"):
        a, b = _src(inst.rs), _src(inst.rt)
        kind = "eq" if m == "BEQ" else "ne"
        target = inst.branch_target()
        if isinstance(a, Imm) and isinstance(b, Imm):
            return [op("branch_cond", [Imm(evaluate(kind, a.value, b.value))], target=target)]
        c = op(kind, [a, b])
        return [c, op("branch_cond", [c.id], target=target)]
    if m in ("BLEZ", "BGTZ"):
        target = inst.branch_target()
        if inst.rs == 0:
            return [op("branch_cond", [Imm(0)], negate=(m == "BLEZ"), target=target)]
        c = op("slt", [Imm(0), Reg(inst.rs)])
        return [c, op("branch_cond", [c.id], negate=(m == "BLEZ"), target=target)]
    if m == "J":
        return [op("jump", target=inst.branch_target())]
    if m == "JAL":
        return [op("const", value=(pc + 4) & MASK32, dest=Reg(31)),
                op("call", callee=inst.branch_target())]
    if m == "JR":
        if inst.rs == 31:
            return [op("return")]
        return [op("jump", [_src(inst.rs)])]
    if m == "SYSCALL":
        if service == SYS_PRINT:
            return [op("output", [Reg(4)])]
        if service == SYS_READ:
            return [op("input", dest=Reg(2))]
        if service == SYS_EXIT:
            return [op("halt")]
        raise UnresolvedSyscall(pc)
    raise ValueError(f"no lowering for {m}")


def parse_binary(image: ProgramImage) -> list[IrOp]:
    """Decode the whole text section and lower it, in address order."""
    insts = {}
    for i, word in enumerate(image.text):
        addr = image.text_base + 4 * i
        insts[addr] = decode(word, addr)
    targets = static_targets(insts)
    low = _Lowering()
    out: list[IrOp] = []
    for addr in sorted(insts):
        inst = insts[addr]
        service = syscall_service(insts, addr, targets) if inst.mnemonic == "SYSCALL" else None
        out.extend(lower(inst, service, low))
    return out
