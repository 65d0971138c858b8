import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binpart import corpus
from binpart.asm import assemble
from binpart.decompiler import decompile, dump_program, execute_cdfg
from binpart.decompiler.ir import MASK32, evaluate
from binpart.errors import ConfigError
from binpart.passes import (
    PassConfig, csd_expand, promote_strength, propagate_constants, reduce_operator_sizes,
    remove_stack_ops, reroll_loops, run_pipeline,
)
from conftest import PROGRAMS, prepared
from vexec import run_lanes

IO = """main: addi $2, $0, 5
    syscall
    addu $8, $2, $0
{}
    addi $2, $0, 1
    addu $4, $9, $0
    syscall
    addi $2, $0, 10
    syscall"""


def body(text):
    return decompile(assemble(IO.format(text)))


def kinds(p):
    return [o.kind for o in p.main.nodes().values()]


def lane_inputs(name, n, seed=0):
    rng = np.random.default_rng(seed)
    k = len(corpus.inputs(name))
    if name == "sum_loop":               # the input is a trip count
        return rng.integers(-8, 64, (n, k)).astype(np.uint64)
    return rng.integers(0, 2**32, (n, k), dtype=np.uint64)


# -- constant propagation --------------------------------------------------------

def test_move_idiom_disappears():
    q, st_ = propagate_constants(body("    addi $9, $8, 0"))
    assert kinds(q) == ["input", "output", "halt"]
    assert any(rule == "add-zero" for _, rule in st_.rewrites)


def test_constant_folding():
    q, _ = propagate_constants(body("    addi $10, $0, 2\n    addi $11, $0, 3\n    addu $9, $10, $11"))
    consts = [o for o in q.main.nodes().values() if o.kind == "const"]
    assert [c.value for c in consts] == [5] or execute_cdfg(q, [0]).outputs == (5,)
    assert "add" not in kinds(q)


@pytest.mark.parametrize("text", [
    "    ori $9, $8, 0", "    xori $9, $8, 0", "    sll $9, $8, 0", "    subu $9, $8, $0",
    "    addi $10, $0, -1\n    and $9, $8, $10", "    addi $10, $0, 1\n    mul $9, $8, $10",
])
def test_identities(text):
    q, _ = propagate_constants(body(text))
    assert kinds(q) == ["input", "output", "halt"]


def test_mul_by_zero():
    q, _ = propagate_constants(body("    mul $9, $8, $0"))
    assert execute_cdfg(q, [1234]).outputs == (0,) and "mul" not in kinds(q)


@pytest.mark.parametrize("name", PROGRAMS)
def test_constprop_shrinks_and_is_idempotent(name):
    pp = prepared(name)
    q, _ = propagate_constants(pp.raw)
    assert q.node_count() <= pp.raw.node_count()
    assert execute_cdfg(q, pp.inputs).same_behaviour(pp.sim)
    q2, _ = propagate_constants(q)
    assert dump_program(q2) == dump_program(q)


# -- stack operations --------------------------------------------------------------

def test_spill_slots_removed():
    p, _ = propagate_constants(decompile(corpus.image("spill")))
    q, st_ = remove_stack_ops(p)
    assert p.node_count() - q.node_count() >= 6
    assert len({site for site, _ in st_.rewrites}) >= 6
    assert execute_cdfg(q, corpus.inputs("spill")).same_behaviour(prepared("spill").sim)
    work = [g for g in q.procedures.values() if g.name != q.main.name][0]
    assert not [o for o in work.nodes().values() if o.kind in ("load", "store")]


def test_escaping_slot_kept():
    src = """
main: addi $29, $29, -8
    addi $8, $0, 5
    sw $8, 0($29)
    addi $4, $29, 0
    jal peek
    addi $4, $2, 0
    addi $2, $0, 1
    syscall
    addi $2, $0, 10
    syscall
peek: lw $2, 0($4)
    jr $31
"""
    p, _ = propagate_constants(decompile(assemble(src)))
    q, st_ = remove_stack_ops(p)
    assert "store" in kinds(q) and st_.rewrites == [] and st_.rejected
    assert execute_cdfg(q).outputs == (5,)


# -- strength promotion ----------------------------------------------------------------

def _promoted(text):
    q, st_ = promote_strength(propagate_constants(body(text))[0])
    return q, st_, [o for o in q.main.nodes().values() if o.kind == "mul"]


def test_promote_times_ten():
    q, st_, muls = _promoted("    sll $10, $8, 3\n    sll $11, $8, 1\n    addu $9, $10, $11")
    assert len(muls) == 1 and muls[0].operands[1].value == 10
    x = np.random.default_rng(3).integers(0, 2**32, 2**16, dtype=np.uint64)
    orig = run_lanes(body("    sll $10, $8, 3\n    sll $11, $8, 1\n    addu $9, $10, $11"), x[:, None])
    assert run_lanes(q, x[:, None]) == orig
    assert [o[0] for o in orig] == ((x * np.uint64(10)) & np.uint64(MASK32)).tolist()


def test_promote_times_seven():
    q, _, muls = _promoted("    sll $10, $8, 3\n    subu $9, $10, $8")
    assert len(muls) == 1 and muls[0].operands[1].value == 7
    alt = muls[0].anno["promoted"]
    for x in np.random.default_rng(4).integers(0, 2**32, 1000).tolist():
        assert alt.evaluate(x) == (7 * x) & MASK32


def test_single_shift_not_promoted():
    _, st_, muls = _promoted("    sll $9, $8, 2")
    assert muls == [] and st_.rewrites == []


@given(st.integers(1, MASK32))
@settings(max_examples=300, deadline=None)
def test_csd_expansion_is_exact(c):
    e = csd_expand(c)
    assert e.coefficient() & MASK32 == c
    for x in (0, 1, 3, 0x7FFFFFFF, 0xFFFFFFFF, c):
        assert e.evaluate(x) == (x * c) & MASK32


@pytest.mark.parametrize("name", PROGRAMS)
def test_promoted_annotations_complete(name):
    pp = prepared(name)
    x = np.random.default_rng(5).integers(0, 2**32, 10**4, dtype=np.uint64)
    for g in pp.program.procedures.values():
        for op in g.nodes().values():
            if op.kind == "mul" and "promoted" in op.anno:
                c = np.uint64(op.operands[1].value & MASK32)
                alt = op.anno["promoted"]
                assert alt.coefficient() & MASK32 == int(c)
                got = np.array([alt.evaluate(v) for v in x[:2000].tolist()], dtype=np.uint64)
                assert (got == (x[:2000] * c) & np.uint64(MASK32)).all()


# -- rerolling ----------------------------------------------------------------------------

def _loop_ops(p, header):
    g = p.main
    lp = [l for l in g.structure.loops() if l.header == header][0]
    return [o for b in lp.blocks for o in g.blocks[b].ops if o.kind != "phi"]


def test_reroll_unrolled_sum():
    pp = prepared("unrolled_sum")
    before, _ = propagate_constants(pp.raw)
    before, _ = remove_stack_ops(before)
    before, _ = propagate_constants(before)
    after, st_ = reroll_loops(before)
    assert any(rule.startswith("reroll-fuse-k4-s4") for _, rule in st_.rewrites)
    hdr = max(l.header for l in before.main.structure.loops())
    n0, n1 = len(_loop_ops(before, hdr)), len(_loop_ops(after, hdr))
    assert n1 <= math.ceil(n0 / 4) + 3
    assert sum(o.kind == "load" for o in _loop_ops(after, hdr)) == 1
    r0, r1 = execute_cdfg(before, pp.inputs), execute_cdfg(after, pp.inputs)
    assert r1.outputs == r0.outputs == pp.sim.outputs
    key = (before.main.entry_addr, hdr)
    assert r1.block_visits[key] == 4 * r0.block_visits[key]


STRAIGHT = """
    .data
arr: .word 3, 5, 7, 11, 13, 17, 19, 23, 29, 31
    .text
main:
    lui $16, %hi(arr)
    ori $16, $16, %lo(arr)
    addi $2, $0, 5
    syscall
    addu $14, $2, $0
{}
    addi $2, $0, 1
    addu $4, $14, $0
    syscall
    addi $2, $0, 10
    syscall
"""


def _straight(n, op="addu"):
    lines = []
    for i in range(n):
        lines += [f"    lw $8, {4 * i + 4}($16)", f"    {op if i != 2 else op} $14, $14, $8"]
    return STRAIGHT.format("\n".join(lines))


def test_reroll_straight_line_block():
    im = assemble(_straight(8))
    p, _ = propagate_constants(decompile(im))
    q, st_ = reroll_loops(p)
    assert any("k8" in rule for _, rule in st_.rewrites)
    assert q.main.structure.loops()
    assert execute_cdfg(q, [100]).outputs == execute_cdfg(p, [100]).outputs


def test_reroll_rejects_mixed_kinds():
    src = STRAIGHT.format("    lw $8, 4($16)\n    addu $14, $14, $8\n    lw $8, 8($16)\n    subu $14, $14, $8")
    p, _ = propagate_constants(decompile(assemble(src)))
    q, st_ = reroll_loops(p)
    assert dump_program(q) == dump_program(p)
    assert not st_.rewrites


# -- operator sizes -------------------------------------------------------------------------

def test_mask_narrows_users():
    q, _ = run_pipeline(body("    andi $9, $8, 0xff\n    addu $9, $9, $9"))
    nodes = q.main.nodes().values()
    (a,) = [o for o in nodes if o.kind == "and"]
    (s,) = [o for o in nodes if o.kind == "add"]
    assert a.width == 8 and s.width == 9


def test_lbu_width():
    src = IO.format("    lui $10, 0x1001\n    sb $8, 0($10)\n    lbu $9, 0($10)")
    q, _ = reduce_operator_sizes(decompile(assemble(src)))
    (ld,) = [o for o in q.main.nodes().values() if o.kind == "load"]
    assert ld.width == 8


@pytest.mark.parametrize("name", PROGRAMS)
def test_masked_widths_sound(name):
    pp = prepared(name)
    x = lane_inputs(name, 2000, seed=9)
    assert run_lanes(pp.program, x, masked=True) == run_lanes(pp.program, x)


# -- pipeline -----------------------------------------------------------------------------------

@pytest.mark.parametrize("name", PROGRAMS)
def test_every_stage_preserves_behaviour(name):
    pp = prepared(name)
    seen = []

    def check(stage, g):
        seen.append(stage)
        assert execute_cdfg(g, pp.inputs).same_behaviour(pp.sim), stage
        assert execute_cdfg(g, pp.inputs, masked=True).same_behaviour(pp.sim), stage

    _, report = run_pipeline(pp.raw, on_stage=check)
    assert seen == list(PassConfig().order)
    for stats in report.stages:
        assert stats.nodes_after <= stats.nodes_before or stats.name == "reroll_loops"


def test_pipeline_identity_when_disabled():
    p = decompile(corpus.image("fir"))
    q, rep = run_pipeline(p, PassConfig.parse(""))
    assert dump_program(q) == dump_program(p) and rep.stages == []


def test_report_dump_format():
    _, rep = run_pipeline(decompile(corpus.image("mul_const")))
    for line in rep.dump().splitlines():
        word, name, site, rule = line.split()
        assert word == "rewrite" and site.isdigit()
    assert "promote-mul-10" in rep.dump()


def test_pass_config_errors():
    with pytest.raises(ConfigError):
        PassConfig.parse("propagate_constants,nonsense")
    with pytest.raises(ConfigError):
        PassConfig(reroll_max_factor=0)


def test_reroll_never_grows_work():
    pp = prepared("unrolled_sum")
    before = execute_cdfg(run_pipeline(pp.raw, PassConfig.parse("propagate_constants,remove_stack_ops"))[0],
                          pp.inputs)
    after = execute_cdfg(pp.program, pp.inputs)
    assert after.outputs == before.outputs
