"""MIPS-I subset: instruction model, bit-exact encoding and the image container.

No branch delay slots; register 0 is hardwired to zero; MUL is the
three-register SPECIAL2 form.  Container and memory are little-endian.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import BadMagic, FieldOutOfRange, TruncatedImage, UnknownOpcode, VersionMismatch

MASK32 = 0xFFFFFFFF

# mnemonic -> funct, for opcode 0 (SPECIAL)
R_FUNCT = {
    "SLL": 0x00, "SRL": 0x02, "SRA": 0x03,
    "SLLV": 0x04, "SRLV": 0x06, "SRAV": 0x07,
    "JR": 0x08, "SYSCALL": 0x0C,
    "ADD": 0x20, "ADDU": 0x21, "SUB": 0x22, "SUBU": 0x23,
    "AND": 0x24, "OR": 0x25, "XOR": 0x26, "NOR": 0x27,
    "SLT": 0x2A, "SLTU": 0x2B,
}
SPECIAL2 = 0x1C
MUL_FUNCT = 0x02

I_OPCODE = {
    "BEQ": 0x04, "BNE": 0x05, "BLEZ": 0x06, "BGTZ": 0x07,
    "ADDI": 0x08, "ADDIU": 0x09, "SLTI": 0x0A,
    "ANDI": 0x0C, "ORI": 0x0D, "XORI": 0x0E, "LUI": 0x0F,
    "LB": 0x20, "LW": 0x23, "LBU": 0x24, "SB": 0x28, "SW": 0x2B,
}
J_OPCODE = {"J": 0x02, "JAL": 0x03}

_R_BY_FUNCT = {v: k for k, v in R_FUNCT.items()}
_I_BY_OPCODE = {v: k for k, v in I_OPCODE.items()}
_J_BY_OPCODE = {v: k for k, v in J_OPCODE.items()}

THREE_REG = {"ADD", "ADDU", "SUB", "SUBU", "AND", "OR", "XOR", "NOR", "SLT", "SLTU", "MUL"}
SHIFT_IMM = {"SLL", "SRL", "SRA"}
SHIFT_VAR = {"SLLV", "SRLV", "SRAV"}
ZERO_EXT_IMM = {"ANDI", "ORI", "XORI"}
ARITH_IMM = {"ADDI", "ADDIU", "SLTI"} | ZERO_EXT_IMM
LOADS = {"LW", "LB", "LBU"}
STORES = {"SW", "SB"}
BRANCH2 = {"BEQ", "BNE"}
BRANCH1 = {"BLEZ", "BGTZ"}
BRANCHES = BRANCH2 | BRANCH1
JUMPS = {"J", "JAL"}

MNEMONICS = frozenset(
    set(R_FUNCT) | {"MUL", "NOP"} | set(I_OPCODE) | set(J_OPCODE)
)

# which fields each mnemonic populates
_FIELDS: dict[str, tuple[str, ...]] = {}
for _m in THREE_REG:
    _FIELDS[_m] = ("rd", "rs", "rt")
for _m in SHIFT_IMM:
    _FIELDS[_m] = ("rd", "rt", "shamt")
for _m in SHIFT_VAR:
    _FIELDS[_m] = ("rd", "rt", "rs")
for _m in ARITH_IMM | LOADS | STORES | BRANCH2:
    _FIELDS[_m] = ("rt", "rs", "imm")
for _m in BRANCH1:
    _FIELDS[_m] = ("rs", "imm")
_FIELDS["LUI"] = ("rt", "imm")
_FIELDS["JR"] = ("rs",)
_FIELDS["SYSCALL"] = ()
_FIELDS["NOP"] = ()
_FIELDS["J"] = ("target",)
_FIELDS["JAL"] = ("target",)


def sign_extend(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


def to_signed32(value: int) -> int:
    return sign_extend(value, 32)


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    rd: int | None = None
    rs: int | None = None
    rt: int | None = None
    imm: int | None = None
    shamt: int | None = None
    target: int | None = None
    address: int = 0

    def fields(self) -> tuple[str, ...]:
        return _FIELDS[self.mnemonic]

    def validate(self) -> None:
        if self.mnemonic not in MNEMONICS:
            raise FieldOutOfRange(f"unsupported mnemonic {self.mnemonic}")
        wanted = set(_FIELDS[self.mnemonic])
        for name in ("rd", "rs", "rt", "imm", "shamt", "target"):
            val = getattr(self, name)
            if name not in wanted:
                if val is not None:
                    raise FieldOutOfRange(f"{self.mnemonic} does not take field {name}")
                continue
            if val is None:
                raise FieldOutOfRange(f"{self.mnemonic} requires field {name}")
            if name in ("rd", "rs", "rt", "shamt") and not 0 <= val <= 31:
                raise FieldOutOfRange(f"{name}={val} out of range")
            if name == "imm":
                lo = 0 if self.mnemonic in ZERO_EXT_IMM or self.mnemonic == "LUI" else -0x8000
                hi = 0xFFFF if lo == 0 else 0x7FFF
                if not lo <= val <= hi:
                    raise FieldOutOfRange(f"imm={val} out of range for {self.mnemonic}")
            if name == "target" and not 0 <= val < (1 << 26):
                raise FieldOutOfRange(f"target={val} out of range")
        if self.address & 3 or not 0 <= self.address <= MASK32:
            raise FieldOutOfRange(f"bad instruction address {self.address:#x}")

    def dest_register(self) -> int | None:
        m = self.mnemonic
        if m in THREE_REG or m in SHIFT_IMM or m in SHIFT_VAR:
            return self.rd
        if m in ARITH_IMM or m in LOADS or m == "LUI":
            return self.rt
        if m == "JAL":
            return 31
        return None

    @property
    def is_control(self) -> bool:
        return self.mnemonic in BRANCHES or self.mnemonic in JUMPS or self.mnemonic == "JR"

    def branch_target(self) -> int:
        """Absolute target of a branch or J/JAL (no delay slots)."""
        if self.mnemonic in BRANCHES:
            return (self.address + 4 + (self.imm << 2)) & MASK32
        if self.mnemonic in JUMPS:
            return ((self.address + 4) & 0xF0000000) | (self.target << 2)
        raise ValueError(f"{self.mnemonic} has no static target")

    def __str__(self) -> str:
        m = self.mnemonic
        if m in ("NOP", "SYSCALL"):
            return m.lower()
        if m in THREE_REG:
            return f"{m.lower()} ${self.rd}, ${self.rs}, ${self.rt}"
        if m in SHIFT_IMM:
            return f"{m.lower()} ${self.rd}, ${self.rt}, {self.shamt}"
        if m in SHIFT_VAR:
            return f"{m.lower()} ${self.rd}, ${self.rt}, ${self.rs}"
        if m in LOADS or m in STORES:
            return f"{m.lower()} ${self.rt}, {self.imm}(${self.rs})"
        if m in BRANCH2:
            return f"{m.lower()} ${self.rs}, ${self.rt}, 0x{self.branch_target():x}"
        if m in BRANCH1:
            return f"{m.lower()} ${self.rs}, 0x{self.branch_target():x}"
        if m == "LUI":
            return f"lui ${self.rt}, 0x{self.imm:x}"
        if m in ARITH_IMM:
            return f"{m.lower()} ${self.rt}, ${self.rs}, {self.imm}"
        if m == "JR":
            return f"jr ${self.rs}"
        return f"{m.lower()} 0x{self.branch_target():x}"


def decode(word: int, address: int = 0) -> Instruction:
    """Decode one 32-bit word.  Non-canonical encodings are rejected."""
    word &= MASK32
    op = word >> 26
    rs = (word >> 21) & 31
    rt = (word >> 16) & 31
    rd = (word >> 11) & 31
    shamt = (word >> 6) & 31
    funct = word & 0x3F
    imm = word & 0xFFFF

    def bad():
        return UnknownOpcode(word, address)

    if word == 0:
        return Instruction("NOP", address=address)
    if op == 0:
        m = _R_BY_FUNCT.get(funct)
        if m is None:
            raise bad()
        if m in THREE_REG:
            if shamt:
                raise bad()
            return Instruction(m, rd=rd, rs=rs, rt=rt, address=address)
        if m in SHIFT_IMM:
            if rs:
                raise bad()
            return Instruction(m, rd=rd, rt=rt, shamt=shamt, address=address)
        if m in SHIFT_VAR:
            if shamt:
                raise bad()
            return Instruction(m, rd=rd, rt=rt, rs=rs, address=address)
        if m == "JR":
            if rt or rd or shamt:
                raise bad()
            return Instruction("JR", rs=rs, address=address)
        # SYSCALL: the 20-bit code field must be zero
        if word != R_FUNCT["SYSCALL"]:
            raise bad()
        return Instruction("SYSCALL", address=address)
    if op == SPECIAL2:
        if funct != MUL_FUNCT or shamt:
            raise bad()
        return Instruction("MUL", rd=rd, rs=rs, rt=rt, address=address)
    if op in _J_BY_OPCODE:
        return Instruction(_J_BY_OPCODE[op], target=word & 0x3FFFFFF, address=address)
    m = _I_BY_OPCODE.get(op)
    if m is None:
        raise bad()
    if m == "LUI":
        if rs:
            raise bad()
        return Instruction("LUI", rt=rt, imm=imm, address=address)
    if m in BRANCH1:
        if rt:
            raise bad()
        return Instruction(m, rs=rs, imm=sign_extend(imm, 16), address=address)
    value = imm if m in ZERO_EXT_IMM else sign_extend(imm, 16)
    return Instruction(m, rt=rt, rs=rs, imm=value, address=address)


def encode(inst: Instruction) -> int:
    inst.validate()
    m = inst.mnemonic
    if m == "NOP":
        return 0

    def r(rs=0, rt=0, rd=0, shamt=0, funct=0, op=0):
        return (op << 26) | (rs << 21) | (rt << 16) | (rd << 11) | (shamt << 6) | funct

    if m == "MUL":
        return r(inst.rs, inst.rt, inst.rd, 0, MUL_FUNCT, SPECIAL2)
    if m in THREE_REG:
        return r(inst.rs, inst.rt, inst.rd, 0, R_FUNCT[m])
    if m in SHIFT_IMM:
        word = r(0, inst.rt, inst.rd, inst.shamt, R_FUNCT[m])
        if word == 0:
            # SLL r0,r0,0 is the NOP encoding; keep the bijection explicit
            raise FieldOutOfRange("SLL $0,$0,0 must be written as NOP")
        return word
    if m in SHIFT_VAR:
        return r(inst.rs, inst.rt, inst.rd, 0, R_FUNCT[m])
    if m == "JR":
        return r(inst.rs, 0, 0, 0, R_FUNCT["JR"])
    if m == "SYSCALL":
        return R_FUNCT["SYSCALL"]
    if m in J_OPCODE:
        return (J_OPCODE[m] << 26) | inst.target
    rs = inst.rs or 0
    rt = inst.rt or 0
    return (I_OPCODE[m] << 26) | (rs << 21) | (rt << 16) | (inst.imm & 0xFFFF)


# ---------------------------------------------------------------- container

MAGIC = b"MB01"
VERSION = 1
_HEADER = struct.Struct("<4s6I")


@dataclass
class ProgramImage:
    entry: int
    text_base: int
    text: list[int]
    data_base: int = 0x10010000
    data: bytes = b""
    symbols: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.text = [w & MASK32 for w in self.text]
        self.data = bytes(self.data)
        if self.text_base & 3 or self.entry & 3:
            raise ValueError("text_base and entry must be word aligned")
        if not self.text_base <= self.entry < self.text_end:
            raise ValueError(f"entry 0x{self.entry:x} outside text")
        if self.data and self.data_base < self.text_end and self.text_base < self.data_base + len(self.data):
            raise ValueError("text and data ranges overlap")

    @property
    def text_end(self) -> int:
        return self.text_base + 4 * len(self.text)

    def in_text(self, address: int) -> bool:
        return self.text_base <= address < self.text_end and not address & 3

    def word_at(self, address: int) -> int:
        return self.text[(address - self.text_base) >> 2]

    def instructions(self) -> dict[int, Instruction]:
        """Decode every text word; undecodable words are skipped."""
        out = {}
        for i, w in enumerate(self.text):
            addr = self.text_base + 4 * i
            try:
                out[addr] = decode(w, addr)
            except UnknownOpcode:
                pass
        return out

    def symbol_at(self, address: int) -> str | None:
        for name, addr in sorted(self.symbols.items()):
            if addr == address:
                return name
        return None

    def __eq__(self, other):
        if not isinstance(other, ProgramImage):
            return NotImplemented
        return (self.entry, self.text_base, self.text, self.data_base, self.data) == (
            other.entry, other.text_base, other.text, other.data_base, other.data)


def save_image(image: ProgramImage) -> bytes:
    text = b"".join(struct.pack("<I", w) for w in image.text)
    header = _HEADER.pack(MAGIC, VERSION, image.entry, image.text_base, len(text),
                          image.data_base, len(image.data))
    return header + text + image.data


def load_image(blob: bytes) -> ProgramImage:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic("container does not start with MB01")
    if len(blob) < _HEADER.size:
        raise TruncatedImage("header truncated")
    _, version, entry, text_base, text_size, data_base, data_size = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise VersionMismatch(f"container version {version}, expected {VERSION}")
    if text_size % 4:
        raise TruncatedImage("text size is not a multiple of 4")
    body = blob[_HEADER.size:]
    if len(body) != text_size + data_size:
        raise TruncatedImage(f"expected {text_size + data_size} payload bytes, got {len(body)}")
    text = [w for (w,) in struct.iter_unpack("<I", body[:text_size])]
    try:
        return ProgramImage(entry=entry, text_base=text_base, text=text, data_base=data_base,
                            data=body[text_size:])
    except ValueError as exc:
        raise TruncatedImage(str(exc)) from None
