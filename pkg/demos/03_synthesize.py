"""Synthesis: the multiplier-or-shift/add decision, the schedule, the FSMD and its VHDL.

    python demos/03_synthesize.py
"""

from binpart import corpus
from binpart.errors import NoFeasibleImpl
from binpart.flow import run_flow
from binpart.synth import ResourceSet

cases = [("mul_const", ResourceSet()), ("mul_const", ResourceSet(multiplier=0)),
         ("dot_product", ResourceSet()), ("dot_product", ResourceSet(multiplier=0))]
for name, resources in cases:
    print(f"{name} [{resources.describe()}]")
    try:
        flow = run_flow(corpus.image(name), corpus.inputs(name), resources=resources, image_name=name)
    except NoFeasibleImpl as exc:
        # x * y has no constant to recode, so it needs a real multiplier
        print(f"  not synthesizable: {exc}\n")
        continue
    for sr in flow.synth:
        print(f"  multiplies: {sorted(set(sr.decisions.values())) or 'none'}")
        print(f"  {len(sr.design.states)} states, {len(sr.design.registers)} registers, "
              f"{sr.schedule.total_steps} control steps")
        print(f"  hardware run: {flow.hw_run.hw_cycles[sr.id]} cycles, outputs {flow.hw_run.result.outputs}"
              f" (simulator {flow.sim.outputs})\n")

flow = run_flow(corpus.image("dot_product"), corpus.inputs("dot_product"), image_name="dot_product")
(sr,) = flow.synth
print("dot_product schedule:")
print(sr.schedule.dump(), end="")
print("\nVHDL, first lines:")
print("\n".join(sr.vhdl.splitlines()[:24]))
