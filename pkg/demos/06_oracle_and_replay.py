"""Brute-force ground truth on a tiny instance, and replaying a recorded run."""
import random

from efxtypes import Instance, few_types_allocate
from efxtypes.oracle import brute_force_check_efx, brute_force_exists_alpha_efx, verify_trace

rng = random.Random(5)
inst = Instance([[rng.randint(0, 9) for _ in range(6)] for _ in range(2)], [2, 2])

X = brute_force_exists_alpha_efx(inst, 1)
print("an exact EFX allocation exists:", X is not None and [sorted(b) for b in X.bundles])

res = few_types_allocate(inst)
print("solver output:", [sorted(b) for b in res.allocation.bundles])
print("pairwise-removal violations at 2/3:", brute_force_check_efx(res.allocation, "2/3"))

report = verify_trace(res.trace, inst)
print(f"replay: pass={report['pass']} checked {report['checked']} of {report['records']} records")

# break one record and replay again
records = [dict(r) for r in res.trace.records]
records[-1]["bundles"] = list(reversed(records[-1]["bundles"]))
print("tampered replay:", verify_trace(records, inst)["mismatches"])
