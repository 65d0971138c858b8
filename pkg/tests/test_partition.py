import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binpart.asm import assemble
from binpart.decompiler import decompile
from binpart.decompiler.ir import IrOp
from binpart.errors import ConfigError, EmptyProfile
from binpart.partition import (
    DEFAULT_TABLE, TOP_RANGE, AddrRange, PlatformModel, Region, compute_alias_sets, enumerate_regions,
    estimate_ops, hardware_suitability, parse_platform, partition,
)
from binpart.passes import run_pipeline
from binpart.simulator import profile_run
from conftest import PROGRAMS, prepared

_ids = iter(range(10**9))


def loop(name, cycles, area, addrs=(), suit=1.0, kind="Loop", address=None):
    n = next(_ids)
    return Region(name, kind, frozenset({n}), cycles, area, frozenset(addrs), suit,
                  address=address if address is not None else 0x400000 + 4 * n)


def platform(cap):
    return PlatformModel(area_capacity_gates=cap)


def hand_regions():
    return [loop("L1", 9000, 5000), loop("L2", 800, 4000), loop("L3", 200, 3000)]


# -- area ------------------------------------------------------------------------------

def test_add_is_384_gates():
    assert estimate_ops([IrOp(1, "add", (2, 3))]) == 384


def test_empty_region_has_no_area():
    assert estimate_ops([]) == 0


KINDS = ["add", "sub", "mul", "and", "or", "xor", "shl", "lshr", "ashr", "slt", "eq", "load", "store",
         "phi", "const", "copy"]


@given(st.lists(st.tuples(st.sampled_from(KINDS), st.integers(1, 32)), max_size=12),
       st.sampled_from(KINDS), st.integers(1, 32))
def test_area_is_monotone(ops, kind, width):
    base = [IrOp(i, k, (100, 101), width=w) for i, (k, w) in enumerate(ops)]
    extra = IrOp(999, kind, (100, 101), width=width)
    assert estimate_ops(base + [extra]) > estimate_ops(base)


def test_area_scales_with_width():
    assert estimate_ops([IrOp(1, "add", (2, 3), width=8)]) == 96
    assert DEFAULT_TABLE.op_gates(IrOp(1, "mul", (2, 3))) == 20 * 32 * 32


# -- alias ------------------------------------------------------------------------------

def test_alias_examples():
    a = loop("a", 1, 1, {AddrRange("A", 0, 96)})
    b = loop("b", 1, 1, {AddrRange("A", 48, 200)})
    c = loop("c", 1, 1, {AddrRange("B", 0, 96)})
    t = loop("t", 1, 1, {TOP_RANGE})
    rel = compute_alias_sets([a, b, c, t])
    assert rel.aliases("a", "b") and rel.aliases("b", "a")
    assert not rel.aliases("a", "c") or rel.aliases("a", "t")
    rel2 = compute_alias_sets([a, b, c])
    assert not rel2.aliases("a", "c")
    assert all(rel.aliases("t", x) for x in "abc")


def test_alias_groups_are_transitive():
    a = loop("a", 1, 1, {AddrRange("A", 0, 8)})
    b = loop("b", 1, 1, {AddrRange("A", 8, 16), AddrRange("B", 0, 0)})
    c = loop("c", 1, 1, {AddrRange("B", 0, 4)})
    d = loop("d", 1, 1, {AddrRange("C", 0, 4)})
    rel = compute_alias_sets([a, b, c, d])
    assert not rel.aliases("a", "c")
    assert rel.group_of("a") == {"a", "b", "c"} and rel.group_of("d") == {"d"}


def test_adjacent_ranges_do_not_alias():
    assert not AddrRange("A", 0, 8, 4).intersects(AddrRange("A", 12, 20, 4))
    assert AddrRange("A", 0, 8, 4).intersects(AddrRange("A", 11, 20, 1))


# -- regions ------------------------------------------------------------------------------

STRIDE = """
    .data
A: .word {}
    .text
main:
    lui $16, %hi(A)
    ori $16, $16, %lo(A)
    addi $8, $0, 0
    addi $9, $0, 100
top:
    sll $10, $8, 2
    addu $10, $10, $16
    sw $8, 0($10)
    addi $8, $8, 1
    bne $8, $9, top
    addi $2, $0, 10
    syscall
"""


def _regions(src, inputs=()):
    im = assemble(src.replace("{}", ", ".join(["0"] * 100)))
    _, prof = profile_run(im, list(inputs))
    prog, _ = run_pipeline(decompile(im))
    return prof, enumerate_regions(prog, prof)


def test_constant_stride_footprint():
    prof, regions = _regions(STRIDE)
    (lp,) = [r for r in regions if r.kind == "Loop"]
    assert lp.addr_set == {AddrRange("A", 0, 396)}
    assert lp.cycles >= 0.9 * prof.total_cycles


def test_straight_line_single_body():
    regions = prepared("straight_line").regions
    assert [r.kind for r in regions] == ["ProcedureBody"]


def test_sum_loop_cycle_share():
    pp = prepared("sum_loop")
    (lp,) = [r for r in pp.regions if r.kind == "Loop"]
    assert lp.cycles / pp.profile.total_cycles >= 0.9


@pytest.mark.parametrize("name", PROGRAMS)
def test_region_invariants(name):
    pp = prepared(name)
    by_proc = {}
    for r in pp.regions:
        by_proc.setdefault(r.proc, []).append(r)
        assert 0.0 <= r.suitability <= 1.0
        g = pp.program.procedures[r.proc]
        if any(op for b in r.blocks for op in g.blocks[b].ops):
            assert r.est_area > 0
    for rs in by_proc.values():
        for i, a in enumerate(rs):
            for b in rs[i + 1:]:
                assert not a.blocks & b.blocks or a.blocks <= b.blocks or b.blocks <= a.blocks
    # every executed cycle belongs to some top-level region
    tops = [r for r in pp.regions if not any(r is not o and r.proc == o.proc and r.blocks < o.blocks
                                             for o in pp.regions)]
    assert sum(r.cycles for r in tops) == pp.profile.total_cycles


def test_unknown_base_is_top():
    src = """main: addi $2, $0, 5
    syscall
    lw $4, 0($2)
    addi $2, $0, 10
    syscall"""
    _, regions = _regions(src, [0x10010000])
    assert TOP_RANGE in regions[0].addr_set


# -- suitability ------------------------------------------------------------------------------

def test_suitability_examples():
    pp = prepared("sum_loop")
    (lp,) = [r for r in pp.regions if r.kind == "Loop"]
    assert lp.suitability == 1.0
    spill = prepared("spill")
    main = [r for r in spill.regions if r.proc == spill.program.main.entry_addr][0]
    assert main.suitability == 0.0      # calls and I/O
    half = """
    .data
X: .word 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0
    .text
main:
    lui $16, %hi(X)
    ori $16, $16, %lo(X)
    addi $9, $16, 64
top:
    lw $8, 0($16)
    sw $8, 0($16)
    addi $16, $16, 4
    bne $16, $9, top
    addi $2, $0, 10
    syscall
"""
    prof, regions = _regions(half)
    (lp,) = [r for r in regions if r.kind == "Loop"]
    assert lp.suitability == pytest.approx(0.5)


def test_unstructured_halves_suitability():
    src = """main: addi $2, $0, 5
    syscall
    addu $8, $2, $0
    beq $8, $0, b
a:  addi $8, $8, 3
    andi $9, $8, 1
    bne $9, $0, b
    addi $8, $8, -1
    j a
b:  addi $8, $8, -2
    slti $9, $8, 40
    bne $9, $0, a
    addi $2, $0, 10
    syscall
"""
    im = assemble(src)
    prog, _ = run_pipeline(decompile(im))
    g = prog.main
    assert any(r.kind == "Unstructured" for r in g.structure.walk())
    assert hardware_suitability(frozenset(g.blocks), g) <= 0.5


# -- partitioner --------------------------------------------------------------------------------

def test_hand_trace_capacity_8000():
    res = partition(hand_regions(), 10000, platform(8000))
    assert res.hw_ids == ["L1"] and res.rationale == {"L1": "Step1Hot"}


def test_hand_trace_capacity_13000_literal():
    """The documented trace claims L3 fails at 16000 gates; 5000 + 4000 + 3000 is 12000, which fits."""
    res = partition(hand_regions(), 10000, platform(13000))
    assert res.hw_ids == ["L1", "L2"]


def test_hand_trace_capacity_13000_recomputed():
    res = partition(hand_regions(), 10000, platform(13000))
    assert res.hw_ids == ["L1", "L2", "L3"]
    assert res.rationale == {"L1": "Step1Hot", "L2": "Step3Greedy", "L3": "Step3Greedy"}
    assert res.total_area == 12000
    res = partition(hand_regions(), 10000, platform(11999))
    assert res.hw_ids == ["L1", "L2"]          # L3 is the first that does not fit


def test_capacity_zero():
    res = partition(hand_regions(), 10000, platform(0))
    assert res.hw_regions == [] and res.total_area == 0


def test_stop_rule_versus_skip():
    regions = [loop("L1", 9000, 5000), loop("L2", 800, 9000), loop("L3", 200, 1000)]
    assert partition(regions, 10000, platform(8000)).hw_ids == ["L1"]
    assert partition(regions, 10000, platform(8000), skip_and_continue=True).hw_ids == ["L1", "L3"]


def test_step2_takes_alias_partners():
    regions = [loop("hot", 9500, 20000, {AddrRange("buf", 0, 60)}),
               loop("cold", 50, 9000, {AddrRange("tab", 0, 28)}),
               loop("user", 40, 6000, {AddrRange("buf", 32, 36)}),
               loop("big", 30, 20000, {AddrRange("buf", 0, 4)})]
    res = partition(regions, 10000, PlatformModel())
    assert res.rationale == {"hot": "Step1Hot", "user": "Step2Alias"}


def test_alias_pair_loops_move_together():
    pp = prepared("alias_pair")
    assert set(pp.partition.hw_ids) == {"loop_00400024", "loop_00400048"}


def test_empty_profile():
    with pytest.raises(EmptyProfile):
        partition(hand_regions(), 0, platform(8000))


def random_regions(rng, n=None):
    n = n or rng.randint(0, 12)
    syms = ["A", "B", "C", "D"]
    out = []
    for i in range(n):
        addrs = set()
        for _ in range(rng.randint(0, 2)):
            s = rng.choice(syms + ["T"])
            if s == "T":
                addrs.add(TOP_RANGE)
            else:
                lo = rng.randrange(0, 200, 4)
                addrs.add(AddrRange(s, lo, lo + rng.randrange(0, 100, 4)))
        out.append(loop(f"R{i}", rng.randint(0, 5000), rng.randint(0, 20000), addrs,
                        rng.choice([0.0, 0.5, 0.8, 1.0]), rng.choice(["Loop", "Loop", "ProcedureBody"])))
    return out


def test_area_safety_random():
    rng = random.Random(42)
    for _ in range(1000):
        regions = random_regions(rng)
        cap = rng.choice([0, 1000, 8000, 30000, 60000, rng.randint(0, 80000)])
        total = sum(r.cycles for r in regions) + rng.randint(1, 100)
        res = partition(regions, total, platform(cap))
        assert res.total_area == sum(r.est_area for r in res.hw_regions) <= cap
        assert not res.violations
        hw = {(r.proc, b) for r in res.hw_regions for b in r.blocks}
        assert not hw & set(res.sw_blocks)
        assert all(r.suitability > 0 for r in res.hw_regions)


def test_ninety_ten_priority():
    rng = random.Random(7)
    for _ in range(100):
        others = random_regions(rng, rng.randint(1, 10))
        rest = sum(r.cycles for r in others)
        hot = loop("hot", 9 * rest + rng.randint(1, 1000), rng.randint(1, 30000), {AddrRange("A", 0, 4)},
                   rng.choice([0.5, 1.0]))
        regions = others + [hot]
        rng.shuffle(regions)
        res = partition(regions, hot.cycles + rest, PlatformModel())
        assert res.hw_ids[0] == "hot" and res.rationale["hot"] == "Step1Hot"


def test_determinism():
    rng = random.Random(3)
    for _ in range(50):
        regions = random_regions(rng)
        a = partition(regions, 10**6, platform(20000))
        b = partition(list(regions), 10**6, platform(20000))
        assert a.hw_ids == b.hw_ids and a.rationale == b.rationale and a.to_text() == b.to_text()


def test_monotone_capacity_counterexample():
    """A bigger budget can admit a hotter loop whose share ends Step 1 early and crowds out a smaller one."""
    regions = [loop("L1", 90, 10), loop("L2", 5, 3)]
    assert partition(regions, 100, platform(5)).hw_ids == ["L2"]
    assert partition(regions, 100, platform(10)).hw_ids == ["L1"]


def test_monotone_capacity_when_everything_fits():
    rng = random.Random(11)
    for _ in range(200):
        regions = random_regions(rng)
        total = sum(r.cycles for r in regions) + 1
        need = sum(r.est_area for r in regions)
        small = partition(regions, total, platform(need)).hw_ids
        big = partition(regions, total, platform(need + rng.randint(0, 10**5))).hw_ids
        assert set(small) <= set(big)


@pytest.mark.parametrize("name", PROGRAMS)
def test_corpus_partitions_are_safe(name):
    res = prepared(name).partition
    assert res.total_area <= PlatformModel().area_capacity_gates and not res.violations


# -- platform ----------------------------------------------------------------------------------

def test_platform_round_trip():
    p = PlatformModel(cpu_clock_hz=40e6, comm_cycles_per_invocation=12.5)
    assert parse_platform(p.to_text()) == p
    assert parse_platform("# comment\nfpga_clock_hz = 50e6  # trailing\n").fpga_clock_hz == 50e6


@pytest.mark.parametrize("text", ["bogus = 1", "cpu_clock_hz = fast", "cpu_clock_hz 1", "cpu_clock_hz = -1",
                                  "fpga_clock_hz = 0"])
def test_platform_errors(text):
    with pytest.raises(ConfigError):
        parse_platform(text)
