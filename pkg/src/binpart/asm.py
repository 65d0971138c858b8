"""Two-pass assembler for the MIPS subset.

Grammar: one instruction or directive per line, ``#`` comments, ``name:``
labels (optionally followed by a statement), registers ``$0``..``$31``.
Directives: ``.text ADDR``, ``.data ADDR``, ``.word N``, ``.byte N``,
``.entry LABEL``.  Immediates accept decimal, hex, a label, or
``%hi(label)`` / ``%lo(label)`` for building addresses with lui/ori.
"""

from __future__ import annotations

import re
import struct

from .errors import (
    AsmSyntaxError,
    BranchOutOfRange,
    DuplicateLabel,
    FieldOutOfRange,
    UndefinedEntry,
    UndefinedLabel,
)
from .isa import (
    ARITH_IMM,
    BRANCH1,
    BRANCH2,
    LOADS,
    SHIFT_IMM,
    SHIFT_VAR,
    STORES,
    THREE_REG,
    Instruction,
    ProgramImage,
    encode,
)

DEFAULT_TEXT_BASE = 0x00400000
DEFAULT_DATA_BASE = 0x10010000

_LABEL = re.compile(r"^([A-Za-z_.][\w.]*)\s*:(.*)$")
_REG = re.compile(r"^\$(\d+)$")
_MEM = re.compile(r"^(.*)\((\$\d+)\)$")
_HILO = re.compile(r"^%(hi|lo)\(([A-Za-z_.][\w.]*)\)$")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _split_operands(rest: str) -> list[str]:
    rest = rest.strip()
    if not rest:
        return []
    return [p.strip() for p in rest.split(",")]


class _Assembler:
    def __init__(self, source: str):
        self.lines = source.splitlines()
        self.text_base = DEFAULT_TEXT_BASE
        self.data_base = DEFAULT_DATA_BASE
        self.labels: dict[str, int] = {}
        self.entry_label: str | None = None
        self.entry_line: int | None = None

    # pass 1: addresses of every label; pass 2: encode
    def run(self) -> ProgramImage:
        stmts = self._collect()
        text: list[int] = []
        data = bytearray()
        for lineno, section, addr, kind, payload in stmts:
            if kind == "inst":
                mnem, ops = payload
                inst = self._build(mnem, ops, addr, lineno)
                try:
                    text.append(encode(inst))
                except FieldOutOfRange as exc:
                    raise AsmSyntaxError(str(exc), lineno) from None
            else:
                value = self._value(payload[1], lineno)
                if payload[0] == "word":
                    word = struct.pack("<I", value & 0xFFFFFFFF)
                    if section == "text":
                        text.append(value & 0xFFFFFFFF)
                    else:
                        off = addr - self.data_base
                        data.extend(b"\0" * (off - len(data)))
                        data.extend(word)
                else:
                    if not -128 <= value <= 255:
                        raise AsmSyntaxError(f"byte value {value} out of range", lineno)
                    off = addr - self.data_base
                    data.extend(b"\0" * (off - len(data)))
                    data.append(value & 0xFF)
        if self.entry_label is not None:
            if self.entry_label not in self.labels:
                raise UndefinedLabel(f"entry label {self.entry_label!r} undefined", self.entry_line)
            entry = self.labels[self.entry_label]
        elif "main" in self.labels:
            entry = self.labels["main"]
        else:
            entry = self.text_base
        if not text or not self.text_base <= entry < self.text_base + 4 * len(text):
            raise UndefinedEntry("no executable instruction at the entry point")
        return ProgramImage(entry=entry, text_base=self.text_base, text=text,
                            data_base=self.data_base, data=bytes(data), symbols=dict(self.labels))

    def _collect(self):
        section = "text"
        counters = {"text": None, "data": None}
        stmts = []
        for lineno, raw in enumerate(self.lines, 1):
            line = _strip(raw)
            while line:
                m = _LABEL.match(line)
                if not m:
                    break
                name = m.group(1)
                if name in self.labels:
                    raise DuplicateLabel(f"label {name!r} defined twice", lineno)
                self.labels[name] = self._here(section, counters)
                line = m.group(2).strip()
            if not line:
                continue
            head, *tail = line.split(None, 1)
            head = head.lower()
            rest = tail[0].strip() if tail else ""
            if head in (".text", ".data"):
                section = head[1:]
                if rest:
                    if counters[section] is not None:
                        raise AsmSyntaxError(f"{head} base given after code was emitted", lineno)
                    base = self._int(rest, lineno)
                    if base & 3:
                        raise AsmSyntaxError(f"{head} base must be word aligned", lineno)
                    setattr(self, f"{section}_base", base)
                continue
            if head == ".entry":
                self.entry_label = rest
                self.entry_line = lineno
                continue
            if head in (".word", ".byte"):
                size = 4 if head == ".word" else 1
                for item in _split_operands(rest) or [""]:
                    if not item:
                        raise AsmSyntaxError(f"{head} needs a value", lineno)
                    addr = self._here(section, counters)
                    if size == 4 and addr & 3:
                        addr = (addr + 3) & ~3
                    if section == "text" and size != 4:
                        raise AsmSyntaxError(".byte is not allowed in .text", lineno)
                    stmts.append((lineno, section, addr, "data", (head[1:], item)))
                    counters[section] = addr + size
                continue
            if head.startswith("."):
                raise AsmSyntaxError(f"unknown directive {head}", lineno)
            if section != "text":
                raise AsmSyntaxError("instruction outside .text", lineno)
            addr = self._here(section, counters)
            stmts.append((lineno, section, addr, "inst", (head.upper(), _split_operands(rest))))
            counters[section] = addr + 4
        return stmts

    def _here(self, section, counters):
        cur = counters[section]
        return cur if cur is not None else getattr(self, f"{section}_base")

    # operand helpers
    def _int(self, text: str, lineno: int) -> int:
        try:
            return int(text, 0)
        except ValueError:
            raise AsmSyntaxError(f"bad number {text!r}", lineno) from None

    def _value(self, text: str, lineno: int) -> int:
        m = _HILO.match(text)
        if m:
            addr = self._label(m.group(2), lineno)
            return (addr >> 16) & 0xFFFF if m.group(1) == "hi" else addr & 0xFFFF
        if re.match(r"^[A-Za-z_.]", text):
            return self._label(text, lineno)
        return self._int(text, lineno)

    def _label(self, name: str, lineno: int) -> int:
        if name not in self.labels:
            raise UndefinedLabel(f"undefined label {name!r}", lineno)
        return self.labels[name]

    def _reg(self, text: str, lineno: int) -> int:
        m = _REG.match(text)
        if not m or int(m.group(1)) > 31:
            raise AsmSyntaxError(f"bad register {text!r}", lineno)
        return int(m.group(1))

    def _build(self, mnem: str, ops: list[str], addr: int, lineno: int) -> Instruction:
        def need(n):
            if len(ops) != n:
                raise AsmSyntaxError(f"{mnem.lower()} takes {n} operands, got {len(ops)}", lineno)

        reg = lambda t: self._reg(t, lineno)  # noqa: E731
        if mnem in ("NOP", "SYSCALL"):
            need(0)
            return Instruction(mnem, address=addr)
        if mnem in THREE_REG:
            need(3)
            return Instruction(mnem, rd=reg(ops[0]), rs=reg(ops[1]), rt=reg(ops[2]), address=addr)
        if mnem in SHIFT_IMM:
            need(3)
            return Instruction(mnem, rd=reg(ops[0]), rt=reg(ops[1]),
                               shamt=self._value(ops[2], lineno), address=addr)
        if mnem in SHIFT_VAR:
            need(3)
            return Instruction(mnem, rd=reg(ops[0]), rt=reg(ops[1]), rs=reg(ops[2]), address=addr)
        if mnem in ARITH_IMM:
            need(3)
            return Instruction(mnem, rt=reg(ops[0]), rs=reg(ops[1]),
                               imm=self._value(ops[2], lineno), address=addr)
        if mnem == "LUI":
            need(2)
            return Instruction(mnem, rt=reg(ops[0]), imm=self._value(ops[1], lineno), address=addr)
        if mnem in LOADS or mnem in STORES:
            need(2)
            m = _MEM.match(ops[1].replace(" ", ""))
            if not m:
                raise AsmSyntaxError(f"bad memory operand {ops[1]!r}", lineno)
            off = self._value(m.group(1), lineno) if m.group(1) else 0
            return Instruction(mnem, rt=reg(ops[0]), rs=reg(m.group(2)), imm=off, address=addr)
        if mnem in BRANCH2 or mnem in BRANCH1:
            need(2 if mnem in BRANCH1 else 3)
            target = self._value(ops[-1], lineno)
            disp = target - (addr + 4)
            if disp & 3 or not -0x8000 <= disp >> 2 <= 0x7FFF:
                raise BranchOutOfRange(f"branch target 0x{target:x} out of range", lineno)
            if mnem in BRANCH1:
                return Instruction(mnem, rs=reg(ops[0]), imm=disp >> 2, address=addr)
            return Instruction(mnem, rs=reg(ops[0]), rt=reg(ops[1]), imm=disp >> 2, address=addr)
        if mnem in ("J", "JAL"):
            need(1)
            target = self._value(ops[0], lineno)
            if target & 3 or (target & 0xF0000000) != ((addr + 4) & 0xF0000000):
                raise BranchOutOfRange(f"jump target 0x{target:x} out of region", lineno)
            return Instruction(mnem, target=(target >> 2) & 0x3FFFFFF, address=addr)
        if mnem == "JR":
            need(1)
            return Instruction(mnem, rs=reg(ops[0]), address=addr)
        raise AsmSyntaxError(f"unknown instruction {mnem.lower()}", lineno)


def assemble(source: str) -> ProgramImage:
    return _Assembler(source).run()
