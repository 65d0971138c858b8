import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binpart import corpus
from binpart.asm import assemble
from binpart.errors import (
    BadMagic, BranchOutOfRange, DuplicateLabel, FieldOutOfRange, TruncatedImage, UndefinedEntry,
    UndefinedLabel, UnknownOpcode, VersionMismatch, AsmSyntaxError,
)
from binpart.isa import (
    MNEMONICS, ZERO_EXT_IMM, Instruction, ProgramImage, decode, encode, load_image, save_image,
)


def test_decode_known_words():
    assert decode(0).mnemonic == "NOP"
    i = decode(0x20020005)
    assert (i.mnemonic, i.rt, i.rs, i.imm) == ("ADDI", 2, 0, 5)
    i = decode(0x00221820)
    assert (i.mnemonic, i.rd, i.rs, i.rt) == ("ADD", 3, 1, 2)


def test_encode_known_words():
    assert encode(Instruction("NOP")) == 0
    assert encode(Instruction("ADDI", rt=2, rs=0, imm=5)) == 0x20020005


def test_unknown_opcode():
    with pytest.raises(UnknownOpcode):
        decode(0xFC000000, 0x400000)


def test_field_out_of_range():
    with pytest.raises(FieldOutOfRange):
        encode(Instruction("ADDI", rt=2, rs=0, imm=0x8000))
    with pytest.raises(FieldOutOfRange):
        encode(Instruction("ADD", rd=32, rs=0, rt=0))


@st.composite
def instructions(draw):
    m = draw(st.sampled_from(sorted(MNEMONICS)))
    kw = {}
    for f in Instruction(m).fields():
        if f in ("rd", "rs", "rt", "shamt"):
            kw[f] = draw(st.integers(0, 31))
        elif f == "imm":
            if m in ZERO_EXT_IMM or m == "LUI":
                kw[f] = draw(st.integers(0, 0xFFFF))
            else:
                kw[f] = draw(st.integers(-0x8000, 0x7FFF))
        elif f == "target":
            kw[f] = draw(st.integers(0, (1 << 26) - 1))
    if m == "SLL" and kw == {"rd": 0, "rt": 0, "shamt": 0}:
        m, kw = "NOP", {}
    return Instruction(m, address=0x400000, **kw)


@given(instructions())
@settings(max_examples=500, deadline=None)
def test_encode_decode_bijection(inst):
    assert decode(encode(inst), inst.address) == inst


def test_corpus_words_round_trip():
    for name in corpus.names():
        im = corpus.image(name)
        for k, w in enumerate(im.text):
            assert encode(decode(w, im.text_base + 4 * k)) == w


def test_assemble_addi():
    im = assemble("addi $2,$0,5")
    assert im.text == [0x20020005]


def test_assembler_deterministic():
    src = corpus.source("fir")
    assert save_image(assemble(src)) == save_image(assemble(src))


def test_forward_branch_offset():
    im = assemble("main: beq $1, $2, L\n nop\n nop\nL: nop\n")
    assert decode(im.text[0]).imm == 2


def test_assembler_errors():
    with pytest.raises(UndefinedEntry):
        assemble(".text\nonly:\n")
    with pytest.raises(UndefinedLabel):
        assemble("main: j nowhere")
    with pytest.raises(DuplicateLabel):
        assemble("a: nop\na: nop")
    with pytest.raises(AsmSyntaxError) as e:
        assemble("main: nop\n frob $1")
    assert e.value.line == 2
    far = "main: beq $0, $0, far\n" + " nop\n" * 40000 + "far: nop\n"
    with pytest.raises(BranchOutOfRange):
        assemble(far)


def test_image_round_trip_minimal():
    im = ProgramImage(entry=0x400000, text_base=0x400000, text=[0])
    blob = save_image(im)
    assert save_image(load_image(blob)) == blob
    assert load_image(blob) == im


def test_image_round_trip_corpus():
    for name in corpus.names():
        im = corpus.image(name)
        back = load_image(save_image(im))
        assert (back.entry, back.text_base, back.text, back.data_base, back.data) == \
            (im.entry, im.text_base, im.text, im.data_base, im.data)


def test_image_errors():
    blob = save_image(ProgramImage(entry=0x400000, text_base=0x400000, text=[0]))
    with pytest.raises(BadMagic):
        load_image(b"XXXX" + blob[4:])
    with pytest.raises(TruncatedImage):
        load_image(blob[:10])
    with pytest.raises(VersionMismatch):
        load_image(blob[:4] + struct.pack("<I", 2) + blob[8:])
    bad = bytearray(blob)
    struct.pack_into("<I", bad, 16, 3)      # text size not a multiple of 4
    with pytest.raises(TruncatedImage):
        load_image(bytes(bad))


def test_image_invariants():
    with pytest.raises(ValueError):
        ProgramImage(entry=0x500000, text_base=0x400000, text=[0])
    with pytest.raises(ValueError):
        ProgramImage(entry=0x400002, text_base=0x400000, text=[0])
