"""The plain, reduced and enhanced envy graphs of one allocation, printed as DOT."""
from efxtypes import Allocation, Instance, build_envy_graph, find_cycle, sources
from efxtypes.graphs import ENHANCED, PLAIN, REDUCED

rows = [
    [1, 2, 2, 0],   # type 0 holds one good and envies the pair
    [0, 1, 2, 4],   # type 1 holds the pair and mildly envies {3}; the reduced graph drops that edge
    [0, 1, 1, 2],
]
inst = Instance(rows, [1, 1, 1])
X = Allocation(inst, [{0}, {1, 2}, {3}], set())

for kind in (PLAIN, REDUCED, ENHANCED):
    G = build_envy_graph(X, kind)
    print(f"--- {kind}: sources {sources(G)}, cycle {find_cycle(G)}")
    print(G.to_dot(X), end="")
