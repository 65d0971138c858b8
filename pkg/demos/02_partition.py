"""The 90-10 partitioner on the producer/consumer program: hot loops first, then what they share.

    python demos/02_partition.py
"""

from binpart import corpus
from binpart.decompiler import decompile
from binpart.partition import PlatformModel, compute_alias_sets, enumerate_regions, partition
from binpart.passes import run_pipeline
from binpart.simulator import profile_run

name = "alias_pair"
image = corpus.image(name)
_, profile = profile_run(image, corpus.inputs(name))
program, _ = run_pipeline(decompile(image))
regions = enumerate_regions(program, profile)

print(f"{'region':<16}{'kind':<15}{'cycles':>7}{'share':>8}{'gates':>8}{'suit':>6}  footprint")
for r in regions:
    share = r.cycles / profile.total_cycles
    print(f"{r.id:<16}{r.kind:<15}{r.cycles:>7}{share:>8.1%}{r.est_area:>8}{r.suitability:>6.2f}  "
          + " ".join(sorted(map(str, r.addr_set))))

alias = compute_alias_sets(regions)
print("\nalias groups:", [sorted(g) for g in alias.groups if len(g) > 1])

# The two loops touching buf move together; the third one no longer fits.
for cap in (8_000, 30_000, 60_000):
    res = partition(regions, profile, PlatformModel(area_capacity_gates=cap))
    picked = ", ".join(f"{i} ({res.rationale[i]})" for i in res.hw_ids) or "nothing"
    print(f"capacity {cap:>6}: {picked}; {res.total_area} gates")
