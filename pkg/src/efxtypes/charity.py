"""(1-eps)-EFX allocations that leave a small set of goods unallocated.

All comparisons use the perturbed (tagged) values, so every rule that fires
strictly improves someone even when real values tie.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .core import (Allocation, Certificate, ContractError, DiagnosticError, InputError, Instance,
                   Value, check_charity, enforce_ordering_invariant, format_fraction,
                   leading_agents, pareto_dominates, to_fraction)
from .graphs import PLAIN, build_envy_graph, find_cycle, find_path, reachable, sources
from .ppa import seed_allocation
from .resolution import cycle_resolution, utility_sum
from .trace import Trace, snapshot

RAINBOW_BUDGET = 10 ** 5
RULE_BUDGET = 10 ** 5

RULES = ("cycle", "pool_envy", "pool_envy_strict", "nonvaluable", "source_absorb", "rainbow")


def _eps(eps) -> Fraction:
    eps = to_fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise InputError(f"epsilon must lie in (0, 1/2], got {eps}")
    return eps


def heavy_envies(a: int, X: Allocation, S: Iterable[int], eps) -> bool:
    S = frozenset(S)
    if not S:
        return False
    return X.value(a) < X.value(a, S) * (1 - Fraction(eps))


def is_valuable(a: int, X: Allocation, g: int, eps) -> bool:
    return X.value(a, (g,)) > X.value(a) * Fraction(eps)


class Witness(NamedTuple):
    claimant: int
    subset: FrozenSet[int]
    origin: FrozenSet[int]


def witness_ok(X: Allocation, S: Iterable[int], eps) -> bool:
    """Nobody heavily envies ``S`` after removing any single good from it."""
    S = frozenset(S)
    if len(S) <= 1:
        return True
    keep = 1 - Fraction(eps)
    for b in range(X.n):
        rest = X.value(b, S) - min(X.value(b, (h,)) for h in S)
        if X.value(b) < rest * keep:
            return False
    return True


def most_envious_witness(X: Allocation, T: Iterable[int], eps) -> Witness:
    """Peel goods off ``T`` until no agent heavily envies what is left minus a good.

    The claimant is the last agent whose heavy envy caused a peel (or the
    first heavy envier of ``T`` if nothing was peeled).
    """
    T = frozenset(T)
    keep = 1 - Fraction(eps)
    claimant = next((a for a in range(X.n) if heavy_envies(a, X, T, eps)), None)
    if claimant is None:
        raise ContractError("nobody heavily envies the given set")
    S = T
    while True:
        for b in range(X.n):
            own = X.value(b)
            hit = next((h for h in sorted(S) if own < X.value(b, S - {h}) * keep), None)
            if hit is not None:
                S, claimant = S - {hit}, b
                break
        else:
            return Witness(claimant, S, T)


def feasible_subsets(X: Allocation, T: Iterable[int], eps) -> List[FrozenSet[int]]:
    """All non-empty ``S`` within ``T`` satisfying the witness condition.

    The family is closed under taking subsets, so a DFS that adds goods in
    ascending order can stop at the first infeasible set.  Agents of a group
    share one valuation, so only each group's leading agent needs checking.
    """
    T = sorted(T)
    inst = X.instance
    keep = 1 - Fraction(eps)
    leaders = [min(members, key=lambda a: X.value(a)) for members in inst.groups]
    floor = [X.value(u) for u in leaders]
    out = []

    def ok(S):
        if len(S) <= 1:
            return True
        for t, u in enumerate(leaders):
            rest = inst.type_value(t, S) - min(inst.type_value(t, (h,)) for h in S)
            if floor[t] < rest * keep:
                return False
        return True

    def grow(S, start):
        for i in range(start, len(T)):
            S2 = S | {T[i]}
            if ok(S2):
                out.append(S2)
                grow(S2, i + 1)

    grow(frozenset(), 0)
    return out


def best_witness(X: Allocation, a: int, T: Iterable[int], eps,
                 family: Optional[List[FrozenSet[int]]] = None) -> Optional[Witness]:
    """The feasible subset of ``T`` that ``a`` likes most, if she heavily envies it."""
    T = frozenset(T)
    if family is None:
        family = feasible_subsets(X, T, eps)
    if not family:
        return None
    S = max(family, key=lambda s: X.value(a, s))
    if not heavy_envies(a, X, S, eps):
        return None
    return Witness(a, S, T)


# ---------------------------------------------------------------------------
# improvement rules; each returns None when it does not apply

def _finish(X: Allocation, bundles: List[FrozenSet[int]], eps, rule: str) -> Allocation:
    allocated = frozenset().union(*bundles)
    Y = enforce_ordering_invariant(Allocation(X.instance, bundles,
                                              frozenset(range(X.instance.m)) - allocated))
    problems = Y.partition_errors()
    if not pareto_dominates(Y, X):
        problems.append("not a Pareto improvement")
    cert = check_charity(Y, 1 - Fraction(eps), perturbed=True)
    efx = [v for v in cert.violations if "pool" not in v]
    if efx:
        problems.append(f"not (1-eps)-EFX: {efx[:2]}")
    if problems:
        raise DiagnosticError(f"{rule}: " + "; ".join(problems))
    return Y


def improve_pool_envy(X: Allocation, eps, strict: bool = False) -> Optional[Allocation]:
    """If someone heavily envies the pool, a witness subset of it replaces her bundle.

    With ``strict`` the threshold is plain envy and the witness is exactly EFX.
    """
    e = Fraction(0) if strict else Fraction(eps)
    if not X.pool:
        return None
    if strict:
        if not any(X.value(a) < X.value(a, X.pool) for a in range(X.n)):
            return None
        w = _strict_witness(X)
    else:
        if not any(heavy_envies(a, X, X.pool, e) for a in range(X.n)):
            return None
        w = most_envious_witness(X, X.pool, e)
    bundles = list(X.bundles)
    bundles[w.claimant] = w.subset
    return _finish(X, bundles, eps, "pool_envy")


def _strict_witness(X: Allocation) -> Witness:
    T = X.pool
    claimant = next(a for a in range(X.n) if X.value(a) < X.value(a, T))
    S = T
    while True:
        for b in range(X.n):
            hit = next((h for h in sorted(S) if X.value(b) < X.value(b, S - {h})), None)
            if hit is not None:
                S, claimant = S - {hit}, b
                break
        else:
            return Witness(claimant, S, T)


def allocate_nonvaluable(X: Allocation, eps) -> Optional[Allocation]:
    """Give the first pool good that nobody finds valuable to the first source."""
    for g in sorted(X.pool):
        if not any(is_valuable(a, X, g, eps) for a in range(X.n)):
            G = build_envy_graph(X, PLAIN)
            if find_cycle(G) is not None:
                raise ContractError("plain envy graph must be acyclic")
            s = sources(G)[0]
            bundles = list(X.bundles)
            bundles[s] = bundles[s] | {g}
            return _finish(X, bundles, eps, "nonvaluable")
    return None


def source_absorb(X: Allocation, eps) -> Optional[Allocation]:
    """Give pool good ``g`` to source ``s`` when nobody heavily envies ``X_s + g``."""
    G = build_envy_graph(X, PLAIN)
    for s in sources(G):
        for g in sorted(X.pool):
            T = X.bundles[s] | {g}
            if not any(heavy_envies(a, X, T, eps) for a in range(X.n)):
                bundles = list(X.bundles)
                bundles[s] = T
                return _finish(X, bundles, eps, "source_absorb")
    return None


# ---------------------------------------------------------------------------
# group champion graph

Vertex = Tuple[int, int]  # (part index, leading agent)


@dataclass
class GroupChampionGraph:
    goods: List[int]                      # part i <-> low-demand good goods[i]
    parts: List[List[Vertex]]
    source_of: Dict[int, int]             # leading agent -> assigned source
    edges: Dict[Vertex, List[Vertex]] = field(default_factory=dict)
    high_demand: List[int] = field(default_factory=list)

    @property
    def vertices(self) -> List[Vertex]:
        return [v for part in self.parts for v in part]

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        return v in self.edges.get(u, ())

    def edge_count(self) -> int:
        return sum(len(vs) for vs in self.edges.values())


def demand_split(X: Allocation, eps, d: int) -> Tuple[List[int], List[int]]:
    """Pool goods valuable to more than ``d`` leading agents (high) and the rest (low)."""
    leaders = leading_agents(X)
    high, low = [], []
    for g in sorted(X.pool):
        fans = sum(1 for a in leaders if is_valuable(a, X, g, eps))
        (high if fans > d else low).append(g)
    return high, low


def build_group_champion_graph(X: Allocation, eps, d: int, check: bool = True) -> GroupChampionGraph:
    inst = X.instance
    if any(not b for b in X.bundles):
        raise ContractError("every agent must hold a good")
    G = build_envy_graph(X, PLAIN)
    if find_cycle(G) is not None:
        raise ContractError("plain envy graph must be acyclic")
    if any(heavy_envies(a, X, X.pool, eps) for a in range(X.n)):
        raise ContractError("some agent heavily envies the pool")
    leaders = leading_agents(X)
    srcs = sources(G)
    source_of = {}
    for a in leaders:
        source_of[a] = next(s for s in srcs if a in reachable(G, s))
    high, low = demand_split(X, eps, d)
    parts = [[(i, a) for a in leaders if is_valuable(a, X, g, eps)] for i, g in enumerate(low)]
    if check and any(len(p) > d for p in parts):
        raise DiagnosticError("a low-demand part has more than d vertices")
    # champion test: a heavily envies her favourite feasible subset of X_s + g
    families: Dict[Tuple[int, int], List[FrozenSet[int]]] = {}
    champ: Dict[Tuple[int, int, int], bool] = {}

    def is_champion(a, s, i):
        key = (a, s, i)
        if key not in champ:
            T = X.bundles[s] | {low[i]}
            fam = families.setdefault((s, i), feasible_subsets(X, T, eps))
            champ[key] = best_witness(X, a, T, eps, fam) is not None
        return champ[key]

    gcg = GroupChampionGraph(low, parts, source_of, {}, high)
    for i, part in enumerate(parts):
        for u in part:
            a = u[1]
            gcg.edges[u] = [v for j, other in enumerate(parts) if j != i
                            for v in other if is_champion(a, source_of[v[1]], i)]
    if check:
        for j, part in enumerate(parts):
            for v in part:
                for i, other in enumerate(parts):
                    if i != j and not any(gcg.has_edge(u, v) for u in other):
                        raise DiagnosticError(f"vertex {v} has no incoming edge from part {i}")
    return gcg


def find_rainbow_cycle(G: GroupChampionGraph, budget: int = RAINBOW_BUDGET) -> Tuple[Optional[List[Vertex]], bool]:
    """A cycle visiting each part at most once, and whether the search hit its budget.

    Each cycle is looked for only from its smallest vertex.
    """
    order = {v: idx for idx, v in enumerate(G.vertices)}
    expansions = 0
    for start in G.vertices:
        stack = [(start, iter(G.edges.get(start, ())))]
        path, used = [start], {start[0]}
        while stack:
            v, it = stack[-1]
            w = next(it, None)
            if w is None:
                stack.pop()
                used.discard(path.pop()[0])
                continue
            if w == start and len(path) >= 2:
                return list(path), False
            if order[w] <= order[start] or w[0] in used:
                continue
            expansions += 1
            if expansions > budget:
                return None, True
            path.append(w)
            used.add(w[0])
            stack.append((w, iter(G.edges.get(w, ()))))
    return None, False


def _composite_walk(X: Allocation, cycle: Sequence[Vertex], G: GroupChampionGraph):
    """Expand the rainbow cycle into (agent, next agent, good or None) steps."""
    Gx = build_envy_graph(X, PLAIN)
    walk = []
    for idx, (i, a) in enumerate(cycle):
        j, b = cycle[(idx + 1) % len(cycle)]
        path = find_path(Gx, G.source_of[a], a)
        if path is None:
            raise ContractError(f"leading agent {a} not reachable from its source")
        walk += [(x, y, None) for x, y in zip(path, path[1:])]
        walk.append((a, G.source_of[b], G.goods[i]))
    return walk


def _shortcut(walk):
    """First simple cycle inside a closed walk."""
    seen = {}
    for idx, (x, _, _) in enumerate(walk):
        if x in seen:
            return walk[seen[x]:idx]
        seen[x] = idx
    return walk


def resolve_rainbow_cycle(X: Allocation, cycle: Sequence[Vertex], G: GroupChampionGraph, eps) -> Allocation:
    """Move bundles along envy edges and hand witness subsets across champion edges."""
    for idx, u in enumerate(cycle):
        v = cycle[(idx + 1) % len(cycle)]
        if not G.has_edge(u, v):
            raise ContractError(f"{u} -> {v} is not an edge of the group champion graph")
    if len({u[0] for u in cycle}) != len(cycle):
        raise ContractError("cycle visits a part twice")
    steps = _shortcut(_composite_walk(X, cycle, G))
    bundles = list(X.bundles)
    for x, y, g in steps:
        if g is None:
            bundles[x] = X.bundles[y]
        else:
            w = best_witness(X, x, X.bundles[y] | {g}, eps)
            if w is None:
                raise ContractError(f"agent {x} is not a heavy-champion of {y} with good {g}")
            bundles[x] = w.subset
    return _finish(X, bundles, eps, "rainbow")


def choose_d(k: int, eps) -> int:
    """Trade the high-demand bound against an O(d log d) rainbow estimate."""
    eps = to_fraction(eps)
    top = k * math.ceil(2 / eps)

    def estimate(d):
        return d * (d.bit_length()) + math.ceil(Fraction(2 * k) / (eps * d))

    return min(range(1, top + 1), key=lambda d: (estimate(d), d))


def charity_bound(k: int, eps, d: int) -> int:
    return math.ceil(Fraction(2 * k) / (to_fraction(eps) * d))


# ---------------------------------------------------------------------------
# the loop

class CharityStep(NamedTuple):
    rule: str
    allocation: Allocation
    info: dict


def charity_step(X: Allocation, eps, d: int, strict: bool = False,
                 rainbow_budget: int = RAINBOW_BUDGET) -> Tuple[Optional[CharityStep], dict]:
    """Apply the first applicable rule.  The second value carries search diagnostics."""
    G = build_envy_graph(X, PLAIN)
    C = find_cycle(G)
    if C is not None:
        return CharityStep("cycle", cycle_resolution(X, G, C), {"cycle": C}), {}
    Y = improve_pool_envy(X, eps)
    if Y is not None:
        return CharityStep("pool_envy", Y, {}), {}
    if strict:
        Y = improve_pool_envy(X, eps, strict=True)
        if Y is not None:
            return CharityStep("pool_envy_strict", Y, {}), {}
    for rule, fn in (("nonvaluable", allocate_nonvaluable), ("source_absorb", source_absorb)):
        Y = fn(X, eps)
        if Y is not None:
            return CharityStep(rule, Y, {}), {}
    if not X.pool:
        return None, {}
    gcg = build_group_champion_graph(X, eps, d)
    cyc, exhausted = find_rainbow_cycle(gcg, rainbow_budget)
    diag = {"high_demand": len(gcg.high_demand), "low_demand_parts": len(gcg.parts),
            "search_limited": exhausted, "champion_edges": gcg.edge_count()}
    if cyc is None:
        return None, diag
    Y = resolve_rainbow_cycle(X, cyc, gcg, eps)
    return CharityStep("rainbow", Y, {"rainbow_cycle": [list(v) for v in cyc]}), diag


def charity_allocate(instance: Instance, eps, d: Optional[int] = None, strict: bool = False,
                     trace: Optional[Trace] = None, budget: int = RULE_BUDGET,
                     rainbow_budget: int = RAINBOW_BUDGET) -> Tuple[Allocation, dict]:
    """Run the improvement rules from the seed until none applies.

    Returns the final allocation and a report with counts, the bound, and the certificate.
    """
    eps = _eps(eps)
    if instance.m < instance.n:
        raise InputError(f"need at least as many goods as agents (m={instance.m}, n={instance.n})")
    if d is None:
        d = choose_d(instance.k, eps)
    if d < 1:
        raise InputError("d must be positive")
    trace = Trace() if trace is None else trace
    X = seed_allocation(instance)
    trace.append({"step": "seed", "algo": "charity", "epsilon": format_fraction(eps), "d": d,
                  "strict": strict, **snapshot(X)})
    fired = {r: 0 for r in RULES}
    diag: dict = {}
    for it in range(budget):
        step, diag = charity_step(X, eps, d, strict, rainbow_budget)
        if step is None:
            break
        if not utility_sum(step.allocation) > utility_sum(X):
            raise DiagnosticError(f"{step.rule} did not raise the utility sum", trace)
        fired[step.rule] += 1
        trace.append({"step": "charity_step", "rule": step.rule, "iter": it, **step.info,
                      **snapshot(step.allocation)})
        X = step.allocation
    else:
        raise DiagnosticError(f"charity loop exceeded {budget} rule applications", trace)

    high, low = demand_split(X, eps, d)
    bound = charity_bound(instance.k, eps, d)
    cert = check_charity(X, 1 - eps, heavy_epsilon=eps)
    problems = []
    if len(high) > bound:
        problems.append(f"{len(high)} high-demand goods exceed the bound {bound}")
    if any(not any(is_valuable(a, X, g, eps) for a in range(X.n)) for g in X.pool):
        problems.append("a pool good is valuable to nobody")
    if problems:
        raise DiagnosticError("; ".join(problems), trace)
    report = {
        "epsilon": format_fraction(eps),
        "d": d,
        "charity_size": len(X.pool),
        "high_demand": len(high),
        "low_demand_parts": len(low),
        "high_demand_bound": bound,
        "search_limited": bool(diag.get("search_limited", False)),
        "rules_fired": fired,
        "certificate": cert.to_json(),
    }
    trace.append({"step": "done", "report_pass": cert.passed, **snapshot(X)})
    return X, report
