"""Speedup and energy as the processor gets faster, with the hardware results held fixed.

    python demos/04_platform_sweep.py

The kernels here are tiny and the FSMDs unpipelined, so against a 200 MHz
processor the FPGA only breaks even at best; the trend is the point.
"""

from binpart import corpus
from binpart.flow import run_flow
from binpart.report import render_report, render_sweep, sweep

name = "sum_loop"
flow = run_flow(corpus.image(name), [5000], image_name=name)
print(render_report(flow.metrics, flow.partition))

hw = {r.id: r.hw_cycles for r in flow.metrics.regions}
rows = sweep(flow.profile, flow.partition, hw, None, flow.metrics.platform, "cpu_clock_hz", [40e6, 200e6, 400e6])
print(render_sweep("cpu_clock_hz", rows))

rows = sweep(flow.profile, flow.partition, hw, None, flow.metrics.platform.with_(cpu_clock_hz=40e6),
             "comm_cycles_per_invocation", [1000, 100, 0])
print(render_sweep("comm_cycles_per_invocation", rows))
