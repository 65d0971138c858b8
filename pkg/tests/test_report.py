import math
import random
from pathlib import Path

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from binpart import corpus
from binpart.errors import ConfigError, MissingHwCycles
from binpart.flow import run_flow
from binpart.partition import PartitionResult, PlatformModel, Region
from binpart.report import compute_metrics, parse_sweep, render_report, render_sweep, sweep
from conftest import PROGRAMS

GOLDEN = Path(corpus.__file__).parent / "golden"


def kernel(cycles, calls=1, rid="k"):
    r = Region(rid, "Loop", frozenset({hash(rid) % 1000}), cycles, 1000, frozenset(), 1.0)
    r.invocations = calls
    return r


def one_kernel(total, cycles, calls=1):
    r = kernel(cycles, calls)
    return PartitionResult([r], [], r.est_area, {"k": "Step1Hot"}, [], total, 30000)


def test_amdahl_closed_form():
    p = PlatformModel(comm_cycles_per_invocation=0)
    part = one_kernel(1000, 900)
    hw = 900 / p.cpu_clock_hz / 44.8 * p.fpga_clock_hz
    m = compute_metrics(1000, part, {"k": hw}, None, p)
    assert m.kernel_speedup["k"] == pytest.approx(44.8)
    assert m.app_speedup == pytest.approx(8.33, abs=0.01)
    assert m.app_speedup == pytest.approx(1 / (0.1 + 0.9 / 44.8))


def test_empty_partition():
    m = compute_metrics(500, PartitionResult(total_cycles=500), {}, None, PlatformModel())
    assert m.app_speedup == 1.0 and m.energy_savings_fraction == 0.0 and m.area_gates == 0
    text = render_report(m)
    assert "software-only" in text and "app-speedup 1.0000" in text


def test_missing_hw_cycles():
    with pytest.raises(MissingHwCycles):
        compute_metrics(1000, one_kernel(1000, 900), {}, None, PlatformModel())


def test_definitions():
    p = PlatformModel()
    m = compute_metrics(10_000, one_kernel(10_000, 8000, calls=3), {"k": 1200}, {"k": 3}, p)
    assert m.app_speedup == pytest.approx(m.sw_only_time_s / m.partitioned_time_s)
    assert m.energy_savings_fraction == pytest.approx(1 - m.energy_partitioned_j / m.energy_sw_j)
    expect = (2000 + 3 * 100) / p.cpu_clock_hz + 1200 / p.fpga_clock_hz
    assert m.partitioned_time_s == pytest.approx(expect)
    cpu_t = (2000 + 300) / p.cpu_clock_hz
    assert m.energy_partitioned_j == pytest.approx(p.cpu_active_w * cpu_t + p.fpga_active_w * 1200 / p.fpga_clock_hz)


def test_invocations_default_to_profile_counts():
    a = compute_metrics(10_000, one_kernel(10_000, 8000, calls=5), {"k": 100}, None, PlatformModel())
    b = compute_metrics(10_000, one_kernel(10_000, 8000, calls=5), {"k": 100}, {"k": 5}, PlatformModel())
    assert a == b


models = st.builds(
    PlatformModel,
    cpu_clock_hz=st.floats(1e6, 1e9), fpga_clock_hz=st.floats(1e6, 1e9),
    comm_cycles_per_invocation=st.floats(0, 1e4), cpu_active_w=st.floats(0.01, 10),
    fpga_active_w=st.floats(0.01, 10), idle_w=st.floats(0.01, 1),
)


@given(models, st.integers(1, 10**7), st.floats(0, 1), st.floats(1, 10**6), st.integers(1, 1000))
@settings(max_examples=300)
def test_amdahl_bound(p, total, f, hw, calls):
    moved = int(total * f)
    assume(moved < total)
    m = compute_metrics(total, one_kernel(total, moved, calls), {"k": hw}, None, p)
    assert m.app_speedup <= 1 / (1 - moved / total) * (1 + 1e-9)


@given(models, st.integers(100, 10**7), st.floats(0.01, 0.99), st.floats(1, 10**6), st.integers(1, 1000),
       st.floats(0, 1))
@settings(max_examples=300)
def test_less_communication_never_hurts(p, total, f, hw, calls, shrink):
    part = one_kernel(total, int(total * f), calls)
    lo = p.with_(comm_cycles_per_invocation=p.comm_cycles_per_invocation * shrink)
    a = compute_metrics(total, part, {"k": hw}, None, p).app_speedup
    b = compute_metrics(total, part, {"k": hw}, None, lo).app_speedup
    assert b >= a * (1 - 1e-12)


@given(models, st.integers(100, 10**7), st.floats(0.01, 0.99), st.floats(2, 10**6), st.integers(1, 1000),
       st.floats(1.01, 10))
@settings(max_examples=300)
def test_faster_cpu_lowers_speedup(p, total, f, hw, calls, factor):
    part = one_kernel(total, int(total * f), calls)
    fast = p.with_(cpu_clock_hz=p.cpu_clock_hz * factor)
    a = compute_metrics(total, part, {"k": hw}, None, p).app_speedup
    b = compute_metrics(total, part, {"k": hw}, None, fast).app_speedup
    assert b < a


@pytest.mark.parametrize("name", PROGRAMS)
def test_report_matches_golden(name):
    fr = run_flow(corpus.image(name), corpus.inputs(name), image_name=name)
    assert render_report(fr.metrics, fr.partition, fr.pass_report) == (GOLDEN / f"{name}.report").read_text()


def _totals(text):
    out = {}
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 2 and parts[0][0].isalpha():
            try:
                out[parts[0]] = float(parts[1])
            except ValueError:
                pass
    return out


@pytest.mark.parametrize("name", PROGRAMS)
def test_report_rows_add_up(name):
    fr = run_flow(corpus.image(name), corpus.inputs(name), image_name=name)
    m, p = fr.metrics, fr.metrics.platform
    text = render_report(m, fr.partition)
    t = _totals(text)
    rows = [line.split() for line in text.splitlines() if line.startswith(("loop_", "proc_"))]
    assert len(rows) == len(m.regions)
    sw = sum(int(r[2]) for r in rows)
    hw = sum(float(r[3]) for r in rows)
    calls = sum(int(r[4]) for r in rows)
    assert sum(int(r[5]) for r in rows) == t["area-gates"]
    total = t["total-cycles"]
    assert t["sw-only-time-s"] == pytest.approx(total / p.cpu_clock_hz, rel=1e-5)
    part = (total - sw + calls * p.comm_cycles_per_invocation) / p.cpu_clock_hz + hw / p.fpga_clock_hz
    assert t["partitioned-time-s"] == pytest.approx(part, rel=1e-5)
    assert t["app-speedup"] == pytest.approx(t["sw-only-time-s"] / t["partitioned-time-s"], abs=1e-4)
    assert t["energy-savings"] == pytest.approx(1 - t["energy-partitioned-j"] / t["energy-sw-j"], abs=1e-4)
    assert t["hw-fraction"] == pytest.approx(sw / total, abs=1e-4)


def test_sweep_over_cpu_clocks():
    fr = run_flow(corpus.image("sum_loop"), corpus.inputs("sum_loop"), image_name="sum_loop")
    key, values = parse_sweep("cpu_clock_hz=40e6,200e6,400e6")
    hw = {r.id: r.hw_cycles for r in fr.metrics.regions}
    rows = sweep(fr.profile, fr.partition, hw, None, fr.metrics.platform, key, values)
    speedups = [m.app_speedup for _, m in rows]
    assert speedups[0] > speedups[1] > speedups[2]
    text = render_sweep(key, rows)
    assert len(text.splitlines()) == 4 and "cpu_clock_hz=4e+07" in text


@pytest.mark.parametrize("text", ["cpu_clock_hz", "nonsense=1,2", "cpu_clock_hz=", "cpu_clock_hz=a,b"])
def test_bad_sweep(text):
    with pytest.raises(ConfigError):
        parse_sweep(text)


def test_render_is_deterministic():
    fr = run_flow(corpus.image("fir"), corpus.inputs("fir"), image_name="fir")
    assert render_report(fr.metrics, fr.partition, fr.pass_report) == \
        render_report(fr.metrics, fr.partition, fr.pass_report)
