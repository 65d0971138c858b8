import random
import warnings
from contextlib import contextmanager
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binpart import corpus
from binpart.asm import assemble
from binpart.decompiler import (
    Graph, build_cdfg, build_cfg, compute_dominators, compute_postdominators, decompile, dump_program,
    execute_cdfg, parse_binary, recover_structures,
)
from binpart.decompiler.ir import KINDS, Reg
from binpart.errors import IndirectJump
from binpart.isa import BRANCHES
from binpart.simulator import profile_run, run
from conftest import PROGRAMS, prepared


# -- parsing -------------------------------------------------------------------

def test_parse_addi_zero_is_const():
    ops = parse_binary(assemble("main: addi $2, $0, 5\n syscall"))
    assert ops[0].kind == "const" and ops[0].value == 5 and ops[0].dest == Reg(2)


def test_parse_beq_lowering():
    ops = parse_binary(assemble("main: beq $1, $2, L\nL: addi $2, $0, 10\n syscall"))
    assert [o.kind for o in ops[:2]] == ["eq", "branch_cond"]
    assert ops[0].operands == [Reg(1), Reg(2)]


@pytest.mark.parametrize("name", PROGRAMS)
def test_parse_is_isa_free(name):
    for op in parse_binary(corpus.image(name)):
        assert op.kind in KINDS and op.kind.upper() not in BRANCHES


# -- control flow ---------------------------------------------------------------

def test_straight_line_single_block():
    im = corpus.image("straight_line")
    cfg = build_cfg(parse_binary(im), im)
    assert len(cfg.blocks) == 1 and cfg.edges == []


def test_diamond_cfg():
    im = corpus.image("diamond")
    cfg = build_cfg(parse_binary(im), im)
    assert len(cfg.blocks) == 4
    assert {(e.src, e.dst) for e in cfg.edges} == {(0, 1), (0, 2), (1, 3), (2, 3)}


def test_indirect_jump():
    im = corpus.image("jump_table")
    with pytest.raises(IndirectJump) as e:
        decompile(im)
    assert e.value.exit_code == 5 and e.value.address == im.symbols["main"] + 28
    p = decompile(im, strict=False)
    assert im.entry in p.failed


@pytest.mark.parametrize("name", PROGRAMS)
def test_blocks_partition_executed_code(name):
    pp = prepared(name)
    cfg = build_cfg(parse_binary(pp.image), pp.image)
    seen = [a for b in cfg.blocks.values() for a in b.addrs]
    assert len(seen) == len(set(seen))
    assert set(pp.profile.instr_cycles) <= set(seen)


# -- dominators -------------------------------------------------------------------

def random_graph(rng, n):
    succs = {}
    for v in range(n):
        k = rng.choice([0, 1, 1, 2, 2])
        succs[v] = sorted({rng.randrange(n) for _ in range(k)})
    for v in range(1, n):          # keep most nodes reachable
        if rng.random() < 0.8:
            u = rng.randrange(v)
            if v not in succs[u] and len(succs[u]) < 2:
                succs[u].append(v)
    return Graph(0, succs)


def brute_dominators(g):
    """Dominators by enumerating every simple path from the entry."""
    doms: dict[int, set] = {}

    def walk(v, path):
        doms[v] = set(path) if v not in doms else doms[v] & set(path)
        for s in g.succs[v]:
            if s not in path:
                walk(s, path + [s])
    walk(g.entry, [g.entry])
    return doms


def test_dominators_vs_paths_100_random():
    rng = random.Random(7)
    for _ in range(100):
        g = random_graph(rng, rng.randint(1, 12))
        with _quiet():
            dt = compute_dominators(g)
        oracle = brute_dominators(g)
        assert set(dt.idom) == set(oracle)
        for v in oracle:
            assert dt.dominators(v) == oracle[v]


def test_dominators_20_blocks():
    rng = random.Random(11)
    for _ in range(30):
        g = random_graph(rng, 20)
        with _quiet():
            dt = compute_dominators(g)
        reach = _reach(g, None)
        for d in reach:
            cut = _reach(g, d)
            for b in reach:
                assert dt.dominates(d, b) == (b == d or b not in cut)


def _reach(g, removed):
    seen, todo = set(), [g.entry] if g.entry != removed else []
    while todo:
        v = todo.pop()
        if v in seen:
            continue
        seen.add(v)
        todo.extend(s for s in g.succs[v] if s != removed)
    return seen


@contextmanager
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


def test_dominator_textbook_cases():
    dt = compute_dominators(Graph(0, {0: []}))
    assert dt.idom[0] == 0
    g = Graph(0, {0: [1, 2], 1: [3], 2: [3], 3: []})
    dt = compute_dominators(g)
    assert all(dt.dominates(0, v) for v in range(4)) and dt.idom[3] == 0
    pdt = compute_postdominators(g)
    assert pdt.idom[0] == 3


def test_unreachable_block_warns():
    with pytest.warns(UserWarning):
        dt = compute_dominators(Graph(0, {0: [], 1: [0]}))
    assert dt.unreachable == {1}


# -- structure -----------------------------------------------------------------------

def test_diamond_if_then_else():
    im = corpus.image("diamond")
    tree = recover_structures(build_cfg(parse_binary(im), im))
    assert any(r.kind == "IfThenElse" for r in tree.walk())


def test_counted_loop_induction():
    im = corpus.image("sum_loop")
    tree = recover_structures(build_cfg(parse_binary(im), im))
    (lp,) = tree.loops()
    assert lp.loop_kind == "pre-tested"
    ind = lp.inductions[0]
    assert (ind.var, ind.init, ind.step) == (8, 0, 1) and ind.bound[0] == "slt"


def test_irreducible_is_unstructured():
    tree = recover_structures(Graph(0, {0: [1, 2], 1: [2], 2: [1, 3], 3: []}))
    assert tree.contains_unstructured()
    assert not tree.loops()


@pytest.mark.parametrize("name", PROGRAMS)
def test_structure_flattens_to_cfg_edges(name):
    im = corpus.image(name)
    cfg = build_cfg(parse_binary(im), im)
    for entry in cfg.procedures:
        g = cfg.graph(entry)
        tree = recover_structures(cfg.graph(entry))
        assert tree.flatten_edges() == {(u, s) for u, ss in g.succs.items() for s in ss}
        for r in tree.walk():
            for c in r.children:
                assert c.blocks <= r.blocks


@given(st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_natural_loops_property(seed):
    g = random_graph(random.Random(seed), 10)
    with _quiet():
        dom = compute_dominators(g)
        tree = recover_structures(g, dom)
    preds = g.preds()
    for lp in tree.loops():
        h = lp.header
        for u, hh in lp.back_edges:
            assert hh == h and dom.dominates(h, u)
        body = {h}
        todo = [u for u, _ in lp.back_edges]
        while todo:
            v = todo.pop()
            if v not in body:
                body.add(v)
                todo.extend(p for p in preds[v] if p in dom.idom)
        assert body == set(lp.blocks)


# -- CDFG ----------------------------------------------------------------------------

def _main_graph(src):
    return decompile(assemble(src)).main


def test_double_use_gives_two_data_edges():
    g = _main_graph("""
main: addi $2, $0, 5
    syscall
    addu $8, $2, $0
    addi $2, $0, 5
    syscall
    addu $9, $8, $2
    addu $10, $9, $9
    addi $2, $0, 1
    addu $4, $10, $0
    syscall
    addi $2, $0, 10
    syscall""")
    nodes = g.nodes()
    (x,) = [o for o in nodes.values() if o.kind == "add" and o.origin == 0x400014]
    (y,) = [o for o in nodes.values() if o.kind == "add" and o.origin == 0x400018]
    assert y.operands == [x.id, x.id]
    assert g.data_edges().count((x.id, y.id)) == 2


def test_disjoint_offsets_have_no_memory_edge():
    base = "main: lui $8, 0x1001\n addi $9, $0, 3\n sw $9, 0($8)\n lw $10, {}($8)\n addi $2, $0, 10\n syscall"
    assert _main_graph(base.format(4)).mem_edges == []
    assert len(_main_graph(base.format(0)).mem_edges) == 1


@pytest.mark.parametrize("name", PROGRAMS)
def test_cdfg_matches_simulator(name):
    pp = prepared(name)
    pp.raw.verify()
    res = execute_cdfg(pp.raw, pp.inputs)
    assert res.same_behaviour(pp.sim)
    cheap = run(pp.image, pp.inputs, costs={"default": 1})
    assert cheap.outputs == res.outputs


def test_const_print_cdfg():
    assert execute_cdfg(decompile(corpus.image("const_print"))).outputs == (7,)


def test_dump_deterministic():
    im = corpus.image("fir")
    assert dump_program(decompile(im)) == dump_program(decompile(im))
    text = dump_program(decompile(im))
    assert text.startswith("proc ") and "\nnode " in text and "\ncedge " in text


@pytest.mark.parametrize("name", PROGRAMS)
def test_cdfg_dump_matches_golden(name):
    golden = Path(corpus.__file__).parent / "golden" / f"{name}.cdfg"
    assert dump_program(prepared(name).program) == golden.read_text()
