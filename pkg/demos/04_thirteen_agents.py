"""A cycle resolution in the enhanced graph that does not remove edges,
while the weighted product potential still goes up."""
from efxtypes import build_envy_graph, cycle_resolution, potential_phi
from efxtypes.graphs import ENHANCED

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from fixtures import I1, I2, I3, S, thirteen_agents  # noqa: E402

names = {S: "s", I1: "i1", I2: "i2", I3: "i3"}
names.update({a: f"j{a - 3}" for a in range(4, 8)})
names.update({a: f"k{a - 7}" for a in range(8, 13)})


def show(G):
    for (u, v), lab in sorted(G.edges.items()):
        print(f"  {names[u]} -> {names[v]} ({lab})")


inst, X = thirteen_agents()
Ge = build_envy_graph(X, ENHANCED)
print(f"before: {len(Ge.edges)} edges")
show(Ge)

Y = cycle_resolution(X, Ge, [S, I1, I2, I3])
after = build_envy_graph(Y, ENHANCED)
print(f"after resolving s -> i1 -> i2 -> i3 -> s: {len(after.edges)} edges")
show(after)

print("potential rose:", potential_phi(Y) > potential_phi(X))
print("constant term before/after:", potential_phi(X).base, potential_phi(Y).base)
