import random
from fractions import Fraction

import pytest

from efxtypes.core import (TWO_THIRDS, Allocation, ContractError, check_alpha_efx, critical_goods,
                           enforce_ordering_invariant, pareto_dominates)
from efxtypes.graphs import ENHANCED, ENVY, PLAIN, RED, REDUCED, build_envy_graph, find_cycle
from efxtypes.resolution import (Potential, all_cycles_resolution, cycle_resolution, ece_completion,
                                 path_resolution, path_resolution_star, potential_phi, singleton_pool,
                                 utility_sum, weight)
from efxtypes.trace import Trace

from fixtures import I1, I2, I3, J, K, S, make, random_instance, thirteen_agents


class TestPotential:
    def test_weights(self):
        assert weight(1) == 1 and weight(2) == weight(5) == Fraction(3, 2)

    def test_all_singletons_is_product(self):
        inst, X = make([[2, 3, 5]], [3], [{0}, {1}, {2}], set())
        assert potential_phi(X).base == 30

    def test_pair_weighted(self):
        inst, X = make([[2, 2, 5]], [2], [{0, 1}, {2}], set())
        assert potential_phi(X).base == Fraction(3, 2) * 4 * 5

    def test_empty_bundles_skipped(self):
        inst, X = make([[2, 3]], [2], [{0}, set()], {1})
        assert potential_phi(X).base == 2

    def test_polynomial_order(self):
        assert Potential((Fraction(1), Fraction(5))) < Potential((Fraction(1), Fraction(5), Fraction(1)))
        assert Potential((Fraction(2),)) > Potential((Fraction(1), Fraction(100)))
        assert Potential((Fraction(2), Fraction(0))) == Potential((Fraction(2),))
        assert hash(Potential((Fraction(2), Fraction(0)))) == hash(Potential((Fraction(2),)))

    def test_utility_sum(self):
        inst, X = make([[1, 2], [4, 0]], [1, 1], [{0}, {1}], set())
        assert utility_sum(X).base == 1


class TestCycles:
    def test_two_cycle_swap(self):
        inst, X = make([[1, 5], [3, 1]], [1, 1], [{0}, {1}], set())
        Y = cycle_resolution(X, build_envy_graph(X), [0, 1])
        assert Y.bundles == [frozenset({1}), frozenset({0})]
        assert pareto_dominates(Y, X)

    def test_three_cycle_rotation(self):
        rows = [[1, 5, 0], [0, 1, 5], [5, 0, 1]]
        inst, X = make(rows, [1, 1, 1], [{0}, {1}, {2}], set())
        G = build_envy_graph(X, REDUCED)
        Y = cycle_resolution(X, G, [0, 1, 2])
        assert [sorted(b) for b in Y.bundles] == [[1], [2], [0]]
        assert potential_phi(Y).base == 125 > potential_phi(X).base

    def test_rejects_non_cycle(self):
        inst, X = make([[1, 5], [3, 1]], [1, 1], [{0}, {1}], set())
        with pytest.raises(ContractError):
            cycle_resolution(X, build_envy_graph(X), [0])
        inst, X = make([[5, 1], [1, 5]], [1, 1], [{0}, {1}], set())
        with pytest.raises(ContractError):
            cycle_resolution(X, build_envy_graph(X), [0, 1])

    def test_all_cycles_plain_pareto(self):
        rng = random.Random(21)
        for _ in range(200):
            inst = random_instance(rng, max_n=8, m_range=(1, 12))
            owners = [rng.randrange(inst.n + 1) for _ in range(inst.m)]
            bundles = [{g for g, a in enumerate(owners) if a == i} for i in range(inst.n)]
            X = enforce_ordering_invariant(Allocation(inst, bundles, {g for g, a in enumerate(owners) if a == inst.n}))
            Y = all_cycles_resolution(X, PLAIN)
            assert find_cycle(build_envy_graph(Y)) is None
            assert pareto_dominates(Y, X, strict=False)
            assert utility_sum(Y) >= utility_sum(X)

    def test_trace_records(self):
        inst, X = make([[1, 5], [3, 1]], [1, 1], [{0}, {1}], set())
        t = Trace()
        all_cycles_resolution(X, PLAIN, t)
        (rec,) = t.records
        assert rec["step"] == "cycle_resolution" and rec["cycle"] == [0, 1] and rec["red_edges"] == 0
        assert rec["bundles"] == [[1], [0]]


class TestThirteenAgents:
    """An enhanced-graph cycle whose resolution keeps the edge count at nine."""

    def test_before(self):
        inst, X = thirteen_agents()
        Ge = build_envy_graph(X, ENHANCED)
        assert Ge.edges_with(ENVY) == {(S, I1), (I1, I2), (I2, I3)}
        assert Ge.edges_with(RED) == {(I3, S)} | {(I3, k) for k in K}
        assert find_cycle(Ge) == [S, I1, I2, I3]

    def test_after(self):
        inst, X = thirteen_agents()
        Ge = build_envy_graph(X, ENHANCED)
        Y = cycle_resolution(X, Ge, [S, I1, I2, I3])
        after = build_envy_graph(Y, ENHANCED)
        assert after.edges_with(ENVY) == {(I3, k) for k in K}
        assert after.edges_with(RED) == {(j, I1) for j in J}
        assert len(after.edges) == len(Ge.edges) == 9
        assert potential_phi(Y) > potential_phi(X)
        assert check_alpha_efx(Y, TWO_THIRDS)


class TestPaths:
    @staticmethod
    def state():
        # source 0 holds two goods; singleton agent 1 likes pool good 3
        return make([[1, 1, 5, 0], [0, 0, 3, 3]], [1, 1], [{0, 1}, {2}], {3})

    def test_path_resolution_shift(self):
        inst, X = self.state()
        assert path_resolution(X, build_envy_graph(X, REDUCED), [0, 1]) == {0: frozenset({2})}

    def test_path_resolution_star(self):
        inst, X = self.state()
        Y = path_resolution_star(X, build_envy_graph(X, REDUCED), [0, 1])
        assert [sorted(b) for b in Y.bundles] == [[2], [1, 3]] and Y.pool == {0}
        assert check_alpha_efx(Y, TWO_THIRDS) and not critical_goods(Y)

    def test_singleton_pool(self):
        inst, X = self.state()
        assert singleton_pool(X) == path_resolution_star(X, build_envy_graph(X, REDUCED), [0, 1])

    def test_star_rejects_non_source(self):
        inst, X = self.state()
        with pytest.raises(ContractError):
            path_resolution_star(X, build_envy_graph(X, REDUCED), [1])

    def test_singleton_pool_needs_one_good(self):
        inst, X = make([[1, 1, 5, 0, 1], [0, 0, 3, 3, 1]], [1, 1], [{0, 1}, {2}], {3, 4})
        with pytest.raises(ContractError):
            singleton_pool(X)


class TestECE:
    def test_completion(self):
        inst, X = make([[1, 2, 10, 9]], [2], [{3}, {2}], {0, 1})
        t = Trace()
        Y = ece_completion(X, trace=t)
        assert [sorted(b) for b in Y.bundles] == [[0, 2], [1, 3]] and not Y.pool
        assert [(r["agent"], r["good"]) for r in t.steps("ece_give")] == [(0, 1), (0, 0)]
        assert check_alpha_efx(Y, TWO_THIRDS)

    def test_rejects_critical_pool(self):
        inst, X = make([[1, 2]], [2], [{0}, set()], {1})
        with pytest.raises(ContractError, match="critical"):
            ece_completion(X)

    def test_random_critical_free_states(self):
        rng = random.Random(22)
        done = 0
        while done < 100:
            inst = random_instance(rng, max_n=6, m_range=(6, 14))
            goods = sorted(range(inst.m), key=lambda g: -sum(r[g] for r in inst.type_values))
            bundles = [{goods[i]} for i in range(inst.n)]
            X = enforce_ordering_invariant(Allocation(inst, bundles, set(goods[inst.n:])))
            if critical_goods(X):
                continue
            Y = ece_completion(X)
            assert not Y.pool and check_alpha_efx(Y, TWO_THIRDS)
            assert pareto_dominates(Y, X, strict=bool(X.pool))
            done += 1
