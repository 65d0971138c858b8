"""From a binary back to loops: decompile the 4x-unrolled sum and watch the passes undo the unrolling.

    python demos/01_decompile.py
"""

from binpart import corpus
from binpart.decompiler import decompile, execute_cdfg
from binpart.passes import run_pipeline
from binpart.simulator import profile_run

image = corpus.image("unrolled_sum")
inputs = corpus.inputs("unrolled_sum")
sim, profile = profile_run(image, inputs)
print(f"simulator: outputs {sim.outputs}, {profile.total_cycles} cycles")

# Straight out of the decompiler the hot loop still has four copies of its body.
raw = decompile(image)
for lp in raw.main.structure.loops():
    ops = [o for b in lp.blocks for o in raw.main.blocks[b].ops if o.kind != "phi"]
    print(f"raw loop at block {lp.header}: {len(ops)} ops")

# Each stage must keep the program's behaviour; the hook re-runs it after every one.
def check(stage, program):
    assert execute_cdfg(program, inputs).same_behaviour(sim), stage
    print(f"  after {stage:<22} {program.node_count():>4} nodes, behaviour unchanged")

program, report = run_pipeline(raw, on_stage=check)
for lp in program.main.structure.loops():
    ops = [o for b in lp.blocks for o in program.main.blocks[b].ops if o.kind != "phi"]
    print(f"optimized loop at block {lp.header}: {len(ops)} ops")

print()
print(report.summary(), end="")
print("".join(line + "\n" for line in report.dump().splitlines() if "reroll" in line))
