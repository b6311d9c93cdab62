import random

import pytest

from efxtypes.core import TWO_THIRDS, Allocation, ContractError, enforce_ordering_invariant, leading_agents
from efxtypes.graphs import (ENHANCED, ENVY, PLAIN, RED, REDUCED, EnvyGraph, build_envy_graph, find_cycle,
                             find_path, leading_path, reachable, sources)

from fixtures import make, random_instance


def random_state(rng, **kw):
    inst = random_instance(rng, **kw)
    owners = [rng.randrange(inst.n + 1) for _ in range(inst.m)]
    bundles = [{g for g, a in enumerate(owners) if a == i} for i in range(inst.n)]
    pool = {g for g, a in enumerate(owners) if a == inst.n}
    return enforce_ordering_invariant(Allocation(inst, bundles, pool))


def closure_has_cycle(G):
    reach = {v: set(G.successors(v)) for v in G.nodes}
    changed = True
    while changed:
        changed = False
        for v in G.nodes:
            extra = set().union(*(reach[w] for w in reach[v])) - reach[v] if reach[v] else set()
            if extra:
                reach[v] |= extra
                changed = True
    return any(v in reach[v] for v in G.nodes)


def test_plain_edges_are_envy():
    inst, X = make([[1, 5, 0], [3, 1, 0]], [1, 1], [{0}, {1}], {2})
    G = build_envy_graph(X, PLAIN)
    assert G.edges == {(0, 1): ENVY, (1, 0): ENVY}
    assert find_cycle(G) in ([0, 1], [1, 0])


def test_reduced_drops_mild_envy_toward_singleton():
    # agent 0 holds two goods worth 3 and mildly envies the singleton {2} worth 4
    inst, X = make([[1, 2, 4], [0, 0, 1]], [1, 1], [{0, 1}, {2}], set())
    assert build_envy_graph(X, PLAIN).has_edge(0, 1)
    assert not build_envy_graph(X, REDUCED).has_edge(0, 1)


def test_reduced_keeps_strong_envy():
    inst, X = make([[1, 1, 4], [0, 0, 1]], [1, 1], [{0, 1}, {2}], set())
    assert build_envy_graph(X, REDUCED).has_edge(0, 1)


def test_red_edge_toward_pair_source():
    inst, X = make([[4, 1, 2], [0, 2, 2]], [1, 1], [{0}, {1, 2}], set())
    Ge = build_envy_graph(X, ENHANCED)
    assert Ge.edges == {(0, 1): RED}
    assert build_envy_graph(X, REDUCED).edges == {}


def test_subgraph_relations_and_red_invariants():
    rng = random.Random(11)
    for _ in range(300):
        X = random_state(rng, m_range=(2, 14))
        Gp, Gr, Ge = (build_envy_graph(X, kind) for kind in (PLAIN, REDUCED, ENHANCED))
        assert set(Gr.edges) <= set(Gp.edges)
        assert set(Gr.edges) <= set(Ge.edges)
        assert Ge.edges_with(ENVY) == set(Gr.edges)
        srcs = set(sources(Gr))
        for a, s in Ge.edges_with(RED):
            assert len(X.bundles[a]) == 1 and len(X.bundles[s]) > 1 and s in srcs
            assert X.value(a, X.bundles[s]) >= X.value(a) * TWO_THIRDS


def test_plain_sources_are_leading_agents():
    rng = random.Random(12)
    for _ in range(300):
        inst = random_instance(rng, m_range=(1, 16))
        if inst.m < inst.n:
            continue
        # every agent gets at least one good so no two bundles tie
        order = list(range(inst.m))
        rng.shuffle(order)
        bundles = [{order[i]} for i in range(inst.n)]
        for g in order[inst.n:]:
            bundles[rng.randrange(inst.n)].add(g)
        X = enforce_ordering_invariant(Allocation(inst, bundles, set()))
        srcs = sources(build_envy_graph(X, PLAIN))
        assert set(srcs) <= set(leading_agents(X)) and len(srcs) <= inst.k


def test_find_cycle_matches_transitive_closure():
    rng = random.Random(13)
    for _ in range(400):
        n = rng.randint(1, 7)
        edges = {(u, v): ENVY for u in range(n) for v in range(n) if u != v and rng.random() < 0.25}
        G = EnvyGraph(PLAIN, list(range(n)), edges)
        C = find_cycle(G)
        assert (C is not None) == closure_has_cycle(G)
        if C is not None:
            assert len(set(C)) == len(C) >= 2
            assert all(G.has_edge(C[i], C[(i + 1) % len(C)]) for i in range(len(C)))


def test_find_path_is_shortest():
    G = EnvyGraph(PLAIN, [0, 1, 2, 3], {(0, 1): ENVY, (1, 2): ENVY, (2, 3): ENVY, (0, 2): ENVY})
    assert find_path(G, 0, 3) == [0, 2, 3]
    assert find_path(G, 3, 0) is None
    assert find_path(G, 2, 2) == [2]
    assert reachable(G, 1) == [1, 2, 3]


def test_leading_path():
    from fixtures import pseudo_path
    inst, X = pseudo_path()
    Ge = build_envy_graph(X, ENHANCED)
    assert leading_path(X, Ge, 3, 0) == [3, 2, 1, 0]
    with pytest.raises(ContractError):
        leading_path(X, Ge, 4, 0)


def test_leading_path_needs_unique_source():
    inst, X = make([[1, 0], [0, 1]], [1, 1], [{0}, {1}], set())
    Ge = build_envy_graph(X, ENHANCED)
    with pytest.raises(ContractError):
        leading_path(X, Ge, 0, 1)


def test_dot_export():
    inst, X = make([[1, 5], [0, 1]], [1, 1], [{0}, {1}], set())
    dot = build_envy_graph(X).to_dot(X)
    assert dot.startswith("digraph plain {")
    assert '"0:0" -> "1:0" [label=envy];' in dot
    assert build_envy_graph(X).to_dot().count("->") == 1


def test_unknown_kind():
    inst, X = make([[1]], [1], [{0}], set())
    with pytest.raises(ValueError):
        build_envy_graph(X, "fancy")
