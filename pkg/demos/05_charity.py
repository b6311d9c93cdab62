"""(1 - eps)-EFX with a few goods left unallocated, for any number of types."""
import random
from fractions import Fraction

from efxtypes import Instance, charity_allocate
from efxtypes.charity import choose_d

rng = random.Random(11)
rows = [[rng.randint(0, 20) for _ in range(22)] for _ in range(6)]
inst = Instance(rows, [2, 3, 1, 2, 3, 2])

for eps in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)):
    X, report = charity_allocate(inst, eps)
    print(f"eps={eps}  d={choose_d(inst.k, eps)}  charity={report['charity_size']}  "
          f"bound={report['high_demand_bound']}+{report['low_demand_parts']}  "
          f"pass={report['certificate']['pass']}")
    fired = {r: c for r, c in report["rules_fired"].items() if c}
    print("   rules:", fired, " unallocated:", sorted(X.pool))
