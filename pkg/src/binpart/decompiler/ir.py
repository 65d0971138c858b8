"""Instruction-set independent IR shared by the decompiler, passes and synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

MASK32 = 0xFFFFFFFF

BINARY = frozenset({
    "add", "sub", "mul", "and", "or", "xor", "nor",
    "shl", "lshr", "ashr", "slt", "sltu", "eq", "ne",
})
ARITH = frozenset({"add", "sub", "mul"})
LOGIC = frozenset({"and", "or", "xor", "nor", "copy"})
SHIFTS = frozenset({"shl", "lshr", "ashr"})
COMPARES = frozenset({"slt", "sltu", "eq", "ne"})
COMMUTATIVE = frozenset({"add", "mul", "and", "or", "xor", "nor", "eq", "ne"})
MEMORY = frozenset({"load", "store"})
TERMINATORS = frozenset({"branch_cond", "jump", "return", "halt"})
# ops that cannot be deleted just because their value is unused
EFFECTS = frozenset({"store", "load", "call", "input", "output", "param"}) | TERMINATORS
# ops the hardware flow cannot implement
NON_SYNTH = frozenset({"call", "input", "output", "halt"})

KINDS = BINARY | {
    "const", "copy", "load", "store", "branch_cond", "jump", "call", "return",
    "input", "output", "phi", "param", "proj", "halt",
}

_FIXED_ARITY = {k: 2 for k in BINARY}
_FIXED_ARITY.update({
    "const": 0, "copy": 1, "load": 1, "store": 2, "branch_cond": 1,
    "input": 0, "output": 1, "param": 0, "proj": 1, "halt": 0,
})


@dataclass(frozen=True)
class Reg:
    """Register slot reference, only present before SSA construction."""
    n: int

    def __str__(self):
        return f"r{self.n}"


@dataclass(frozen=True)
class Imm:
    value: int

    def __str__(self):
        return f"#{self.value}"


@dataclass
class IrOp:
    id: int
    kind: str
    operands: list[Any] = field(default_factory=list)
    width: int = 32
    origin: int = 0
    anno: dict = field(default_factory=dict)
    value: int | None = None        # const
    size: int | None = None         # load/store bytes
    signed: bool = False            # load sign extension
    negate: bool = False            # branch_cond taken when operand == 0
    reg: int | None = None          # param/proj register
    callee: int | None = None       # call target address
    preds: list[int] | None = None  # phi incoming blocks, aligned with operands
    dest: Reg | None = None         # linear IR only
    target: int | None = None       # linear IR branch/jump target address
    block: int | None = None        # owning block in a Cdfg (None for constants)

    def arity_ok(self) -> bool:
        n = _FIXED_ARITY.get(self.kind)
        if n is not None:
            return len(self.operands) == n
        if self.kind == "jump":
            return len(self.operands) <= 1
        if self.kind == "phi":
            return self.preds is not None and len(self.preds) == len(self.operands) and len(self.operands) >= 1
        return True


def evaluate(kind: str, a: int, b: int = 0) -> int:
    """Two's-complement 32-bit semantics of a binary or unary value op."""
    if kind == "add":
        return (a + b) & MASK32
    if kind == "sub":
        return (a - b) & MASK32
    if kind == "mul":
        return (a * b) & MASK32
    if kind == "and":
        return a & b
    if kind == "or":
        return a | b
    if kind == "xor":
        return a ^ b
    if kind == "nor":
        return ~(a | b) & MASK32
    if kind == "shl":
        return (a << (b & 31)) & MASK32
    if kind == "lshr":
        return a >> (b & 31)
    if kind == "ashr":
        return (signed32(a) >> (b & 31)) & MASK32
    if kind == "slt":
        return int(signed32(a) < signed32(b))
    if kind == "sltu":
        return int(a < b)
    if kind == "eq":
        return int(a == b)
    if kind == "ne":
        return int(a != b)
    if kind == "copy":
        return a
    raise ValueError(f"cannot evaluate {kind}")


def signed32(v: int) -> int:
    v &= MASK32
    return v - (1 << 32) if v >> 31 else v


def mask(width: int) -> int:
    return (1 << width) - 1
