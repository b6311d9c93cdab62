"""Complete 2/3-EFX allocations for up to four agent types, step by step."""
import random
from collections import Counter

from efxtypes import Instance, few_types_allocate

rng = random.Random(3)
rows = [[rng.randint(0, 20) for _ in range(14)] for _ in range(4)]
inst = Instance(rows, [3, 3, 1, 4])

res = few_types_allocate(inst)
print("certificate:", res.certificate.passed)
print("critical-good case:", res.case.value if res.case else "no critical goods")
for a, bundle in enumerate(res.allocation.bundles):
    print(f"  agent {inst.label(a)}: goods {sorted(bundle)} worth {inst.value(a, bundle).base}")

steps = Counter(r["step"] for r in res.trace.records)
print("trace:", dict(sorted(steps.items())))

# where the loop stopped and what was still in the pool
print("pool after the loop:", sorted(res.loop_output.pool))
