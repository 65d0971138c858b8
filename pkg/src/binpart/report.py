"""Speedup and energy metrics for a partitioned run, and their text rendering."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, MissingHwCycles
from .partition.platform import PlatformModel


@dataclass
class RegionMetrics:
    id: str
    tag: str
    sw_cycles: int              # cpu cycles the region takes in software
    hw_cycles: float            # fpga cycles, summed over invocations
    invocations: int
    gates: int
    hw_time_s: float            # fpga time plus communication
    kernel_speedup: float


@dataclass
class MetricsReport:
    sw_only_time_s: float
    partitioned_time_s: float
    app_speedup: float
    kernel_speedup: dict[str, float]
    energy_sw_j: float
    energy_partitioned_j: float
    energy_savings_fraction: float
    area_gates: int
    total_cycles: int = 0
    hw_fraction: float = 0.0
    regions: list[RegionMetrics] = field(default_factory=list)
    platform: PlatformModel = field(default_factory=PlatformModel)


def compute_metrics(profile, partition, hw_cycles: Mapping[str, float],
                    invocations: Mapping[str, int] | None, platform: PlatformModel) -> MetricsReport:
    """Sequential CPU/FPGA execution; ``profile`` is a Profile or a total cycle count.

    ``invocations`` defaults to the entry counts the partitioner took from the profile.
    """
    total = profile if isinstance(profile, (int, float)) else profile.total_cycles
    cpu, fpga = platform.cpu_clock_hz, platform.fpga_clock_hz
    rows = []
    for r in partition.hw_regions:
        if r.id not in hw_cycles:
            raise MissingHwCycles(r.id)
        n = invocations[r.id] if invocations is not None and r.id in invocations else r.invocations
        hw_t = hw_cycles[r.id] / fpga + n * platform.comm_cycles_per_invocation / cpu
        sw_t = r.cycles / cpu
        ks = sw_t / hw_t if hw_t > 0 else float("inf")
        rows.append(RegionMetrics(r.id, partition.rationale.get(r.id, "-"), r.cycles, hw_cycles[r.id], n,
                                  r.est_area, hw_t, ks))
    moved = sum(r.sw_cycles for r in rows)
    sw_only = total / cpu
    comm_t = sum(r.invocations for r in rows) * platform.comm_cycles_per_invocation / cpu
    fpga_t = sum(r.hw_cycles for r in rows) / fpga
    cpu_t = (total - moved) / cpu + comm_t       # the cpu drives every transfer
    part = cpu_t + fpga_t
    e_sw = platform.cpu_active_w * sw_only
    slack = 0.0                                   # no overlap is modeled
    e_part = platform.cpu_active_w * cpu_t + platform.fpga_active_w * fpga_t + platform.idle_w * slack
    return MetricsReport(
        sw_only_time_s=sw_only,
        partitioned_time_s=part,
        app_speedup=sw_only / part if part > 0 else float("inf"),
        kernel_speedup={r.id: r.kernel_speedup for r in rows},
        energy_sw_j=e_sw,
        energy_partitioned_j=e_part,
        energy_savings_fraction=1 - e_part / e_sw if e_sw > 0 else 0.0,
        area_gates=sum(r.gates for r in rows),
        total_cycles=int(total),
        hw_fraction=moved / total if total else 0.0,
        regions=rows,
        platform=platform,
    )


def _g(v: float) -> str:
    return f"{v:.6g}"


def render_report(metrics: MetricsReport, partition=None, pass_report=None) -> str:
    """Deterministic plain-text report: platform, per-region rows, totals."""
    p = metrics.platform
    out = [
        "binpart metrics report",
        f"platform cpu_clock_hz={_g(p.cpu_clock_hz)} fpga_clock_hz={_g(p.fpga_clock_hz)} "
        f"comm_cycles_per_invocation={_g(p.comm_cycles_per_invocation)} "
        f"area_capacity_gates={_g(p.area_capacity_gates)}",
        f"power cpu_active_w={_g(p.cpu_active_w)} fpga_active_w={_g(p.fpga_active_w)} idle_w={_g(p.idle_w)}",
        "",
    ]
    if not metrics.regions:
        out += ["software-only: no region was moved to hardware", ""]
    else:
        out.append(f"{'region':<24}{'tag':<13}{'sw-cycles':>11}{'hw-cycles':>11}{'calls':>7}"
                   f"{'gates':>8}{'kernel-speedup':>16}")
        for r in metrics.regions:
            out.append(f"{r.id:<24}{r.tag:<13}{r.sw_cycles:>11}{_g(r.hw_cycles):>11}{r.invocations:>7}"
                       f"{r.gates:>8}{r.kernel_speedup:>16.4f}")
        out.append("")
    out += [
        f"total-cycles {metrics.total_cycles}",
        f"hw-fraction {metrics.hw_fraction:.4f}",
        f"sw-only-time-s {_g(metrics.sw_only_time_s)}",
        f"partitioned-time-s {_g(metrics.partitioned_time_s)}",
        f"app-speedup {metrics.app_speedup:.4f}",
        f"energy-sw-j {_g(metrics.energy_sw_j)}",
        f"energy-partitioned-j {_g(metrics.energy_partitioned_j)}",
        f"energy-savings {metrics.energy_savings_fraction:.4f}",
        f"area-gates {metrics.area_gates}",
    ]
    if partition is not None and partition.violations:
        out += [f"violation {v}" for v in partition.violations]
    if pass_report is not None:
        out += ["", pass_report.summary().rstrip("\n")]
    return "\n".join(out) + "\n"


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``cpu_clock_hz=40e6,200e6,400e6`` -> (key, values)."""
    key, sep, vals = text.partition("=")
    key = key.strip()
    if not sep or key not in PlatformModel.__dataclass_fields__:
        raise ConfigError(f"bad sweep {text!r}, expected key=v1,v2,...")
    try:
        values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep values in {text!r}") from None
    if not values:
        raise ConfigError(f"sweep {key} has no values")
    return key, values


def sweep(profile, partition, hw_cycles, invocations, platform: PlatformModel,
          key: str, values: Sequence[float]) -> list[tuple[float, MetricsReport]]:
    """Metrics with one platform parameter varied and the hardware results held fixed."""
    return [(v, compute_metrics(profile, partition, hw_cycles, invocations, platform.with_(**{key: v})))
            for v in values]


def render_sweep(key: str, rows: list[tuple[float, MetricsReport]]) -> str:
    out = [f"{'sweep ' + key:<28}{'app-speedup':>12}{'energy-savings':>16}"]
    for v, m in rows:
        out.append(f"{key + '=' + _g(v):<28}{m.app_speedup:>12.4f}{m.energy_savings_fraction:>16.4f}")
    return "\n".join(out) + "\n"
