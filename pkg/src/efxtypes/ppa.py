"""The property-preserving partial allocation loop and its four-types extension.

``ppa_step`` tries the steps in a fixed order and fires the first whose
condition holds.  Whenever several agents or goods qualify, the lowest index
wins.  Steps S9_3/S9_4 only exist for instances with exactly four groups.
"""
from __future__ import annotations

import hashlib
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .core import (ONE_HALF, THREE_HALVES, TWO_THIRDS, Allocation, ContractError, DiagnosticError,
                   Instance, Value, enforce_ordering_invariant, format_fraction, is_alpha_efx_toward,
                   leading_agents, ordering_holds)
from .graphs import (ENHANCED, REDUCED, EnvyGraph, build_envy_graph, find_cycle, find_path,
                     leading_path, reachable, sources)
from .resolution import DEFAULT_BUDGET, all_cycles_resolution, path_resolution_star, singleton_pool
from .trace import Trace, snapshot


class StepId(str, Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    S5 = "S5"
    S6 = "S6"
    S7 = "S7"
    S8 = "S8"
    S9 = "S9"
    S9_1 = "S9_1"
    S9_2_gate = "S9_2_gate"
    S9_3 = "S9_3"
    S9_4 = "S9_4"


PSEUDO_STEPS = (StepId.S9_3, StepId.S9_4)


class Fired(NamedTuple):
    step: StepId
    allocation: Allocation
    actors: List[int]


def seed_allocation(instance: Instance) -> Allocation:
    """Serial dictatorship in flat agent order: each agent takes her favourite remaining good.

    Envy only points toward earlier pickers, so the plain envy graph is acyclic.
    """
    left = set(range(instance.m))
    bundles = []
    for a in range(instance.n):
        if left:
            g = max(left, key=lambda h: instance.value(a, (h,)))
            left.discard(g)
            bundles.append(frozenset((g,)))
        else:
            bundles.append(frozenset())
    return enforce_ordering_invariant(Allocation(instance, bundles, frozenset(left)))


def _best(X: Allocation, a: int, goods: Iterable[int]) -> int:
    return max(goods, key=lambda g: X.value(a, (g,)))


def _replace(X: Allocation, changes: Dict[int, frozenset], pool) -> Allocation:
    bundles = list(X.bundles)
    for a, b in changes.items():
        bundles[a] = frozenset(b)
    return enforce_ordering_invariant(Allocation(X.instance, bundles, frozenset(pool)))


def pseudo_cycle_resolution(X: Allocation, pi: Sequence[int], z_star: int, S: Iterable[int],
                            Ge: Optional[EnvyGraph] = None) -> Allocation:
    """Shift bundles along ``pi`` with ``z_star`` standing in for its first agent.

    ``pi[j]`` takes ``X[pi[j+1]]`` for the inner agents, ``z_star`` takes
    ``X[pi[1]]`` and the last agent takes ``S``; ``pi[0]`` keeps her bundle.
    The pool is left untouched: settling the goods of ``S`` is the caller's job.
    """
    S = frozenset(S)
    if Ge is None:
        Ge = build_envy_graph(X, ENHANCED)
    if len(pi) < 2 or len(set(pi)) != len(pi):
        raise ContractError(f"{list(pi)} is not a path of length >= 2")
    for a, b in zip(pi, pi[1:]):
        if not Ge.has_edge(a, b):
            raise ContractError(f"edge ({a}, {b}) not in the enhanced graph")
    inst = X.instance
    if inst.agent_type[z_star] != inst.agent_type[pi[0]] or z_star in pi:
        raise ContractError("z_star must be an off-path agent of the first agent's group")
    if len(S) > 2:
        raise ContractError("pseudo-cycle bundle has more than two goods")
    changes = {pi[j]: X.bundles[pi[j + 1]] for j in range(1, len(pi) - 1)}
    changes[z_star] = X.bundles[pi[1]]
    changes[pi[-1]] = S
    return _replace(X, changes, X.pool)


class _Graphs:
    """Lazily built reduced/enhanced graphs of one allocation."""

    def __init__(self, X: Allocation):
        self.X = X
        self._r = self._e = None

    @property
    def reduced(self) -> EnvyGraph:
        if self._r is None:
            self._r = build_envy_graph(self.X, REDUCED)
        return self._r

    @property
    def enhanced(self) -> EnvyGraph:
        if self._e is None:
            self._e = build_envy_graph(self.X, ENHANCED)
        return self._e


def ppa_step(X: Allocation, types_mode: bool = True, trace: Optional[Trace] = None) -> Optional[Fired]:
    """Fire the first applicable step; None means the loop is done."""
    if not X.pool:
        return None
    n = X.n
    pool = sorted(X.pool)
    B = X.bundles
    own = X.utilities()
    val = lambda a, goods: X.value(a, goods)

    for a in range(n):  # S1
        if len(B[a]) == 1:
            for g in pool:
                if val(a, (g,)) > own[a]:
                    return Fired(StepId.S1, _replace(X, {a: {g}}, (X.pool | B[a]) - {g}), [a])
    for a in range(n):  # S2
        if len(B[a]) == 2:
            for g in pool:
                if val(a, (g,)) > own[a] * THREE_HALVES:
                    return Fired(StepId.S2, _replace(X, {a: {g}}, (X.pool | B[a]) - {g}), [a])
    for a in range(n):  # S3
        if len(B[a]) == 1:
            bar = own[a] * TWO_THIRDS
            for g1, g2 in combinations(pool, 2):
                if val(a, (g1, g2)) > bar:
                    return Fired(StepId.S3, _replace(X, {a: {g1, g2}}, (X.pool | B[a]) - {g1, g2}), [a])
    for a in range(n):  # S4
        if len(B[a]) == 2:
            for g in pool:
                for h in sorted(B[a]):
                    if val(a, (g,)) > val(a, (h,)):
                        return Fired(StepId.S4, _replace(X, {a: (B[a] - {h}) | {g}}, (X.pool - {g}) | {h}), [a])

    graphs = _Graphs(X)
    if find_cycle(graphs.reduced) is not None:  # S5
        return Fired(StepId.S5, all_cycles_resolution(X, REDUCED, trace), [])
    src_r = sources(graphs.reduced)
    for s in src_r:  # S6
        if len(B[s]) == 1:
            g = _best(X, s, pool)
            return Fired(StepId.S6, _replace(X, {s: B[s] | {g}}, X.pool - {g}), [s])
    if len(pool) == 1:  # S7
        g = pool[0]
        if any(len(B[i]) == 1 and val(i, (g,)) > own[i] * TWO_THIRDS for i in range(n)):
            return Fired(StepId.S7, singleton_pool(X), [])
    if find_cycle(graphs.enhanced) is not None:  # S8
        return Fired(StepId.S8, all_cycles_resolution(X, ENHANCED, trace), [])
    Ge = graphs.enhanced
    for s in src_r:  # S9
        if len(B[s]) != 2:
            continue
        for a in reachable(Ge, s):
            pair = (_best(X, a, pool), _best(X, a, B[s]))
            if own[a] < val(a, pair):
                pi = find_path(Ge, s, a)
                return Fired(StepId.S9, path_resolution_star(X, Ge, pi), list(pi))

    if types_mode and X.instance.k == 4:
        return _pseudo_steps(X, Ge, own)
    return None


def _pseudo_steps(X: Allocation, Ge: EnvyGraph, own: List[Value]) -> Optional[Fired]:
    inst = X.instance
    src_e = sources(Ge)
    if len(src_e) != 1:  # S9_1
        return None
    d1 = src_e[0]
    D = inst.groups[inst.agent_type[d1]]
    if len(D) < 2:
        return None
    if d1 != D[0]:
        raise ContractError(f"unique source {d1} is not the leading agent of its group")
    d2 = D[1]
    others = [u for u in leading_agents(X) if u != d1]
    B = X.bundles
    # S9_2 gate
    if any(len(B[u]) != 1 for u in others):
        return None
    if not (len(B[d2]) == 2 or not Ge.has_edge(d1, d2)):
        return None
    for u in others:  # S9_3
        if own[u] < X.value(u, B[d2]):
            pi = leading_path(X, Ge, d1, u)
            Y = pseudo_cycle_resolution(X, pi, d2, B[d2], Ge)
            return Fired(StepId.S9_3, Y, [d1, d2] + list(pi[1:]))
    pool = sorted(X.pool)
    for u in others:  # S9_4
        pair = (_best(X, u, B[d2]), _best(X, u, pool))
        if own[u] < X.value(u, pair):
            pi = leading_path(X, Ge, d1, u)
            Y = pseudo_cycle_resolution(X, pi, d2, pair, Ge)
            Y.pool = (X.pool | B[d2]) - set(pair)
            return Fired(StepId.S9_4, Y, [d1, d2] + list(pi[1:]))
    return None


# ---------------------------------------------------------------------------
# properties of the loop

def property_violations(X: Allocation, final: bool = False) -> List[str]:
    """Check Properties 1-2 (always) and 3-4 (``final``) in the perturbed order.

    1: singleton holders are EFX toward everyone.  2: everyone is 2/3-EFX.
    3: holders of 2+ goods have no critical pool good.  4: a singleton holder
    has at most one critical pool good, worth at most 2/3 of her bundle.
    """
    out = []
    n = X.n
    for a in range(n):
        alpha = 1 if len(X.bundles[a]) == 1 else TWO_THIRDS
        for b in range(n):
            if a != b and not is_alpha_efx_toward(X, a, b, alpha, perturbed=True):
                out.append(f"P{1 if alpha == 1 else 2}: agent {a} toward {b}")
    if final:
        for a in range(n):
            own = X.value(a)
            crit = [g for g in sorted(X.pool) if X.value(a, (g,)) > own * ONE_HALF]
            if len(X.bundles[a]) > 1 and crit:
                out.append(f"P3: agent {a} has critical goods {crit}")
            if len(X.bundles[a]) == 1:
                if len(crit) > 1:
                    out.append(f"P4: agent {a} has {len(crit)} critical goods")
                elif crit and X.value(a, (crit[0],)) > own * TWO_THIRDS:
                    out.append(f"P4: agent {a} values critical good {crit[0]} above 2/3")
    return out


def source_violations(X: Allocation) -> List[str]:
    """For an incomplete loop output: the enhanced graph has a source and all sources hold 2 goods."""
    if not X.pool:
        return []
    src = sources(build_envy_graph(X, ENHANCED))
    if not src:
        return ["enhanced graph has no source"]
    return [f"source {s} holds {len(X.bundles[s])} goods" for s in src if len(X.bundles[s]) != 2]


def group_minima(X: Allocation) -> List[Value]:
    inst = X.instance
    return [min(inst.type_value(t, X.bundles[a]) for a in members)
            for t, members in enumerate(inst.groups)]


def config_hash(config) -> str:
    return hashlib.sha1(repr(config).encode()).hexdigest()[:16]


def run_ppa_types(instance: Instance, X0: Allocation, types_mode: bool = True,
                  trace: Optional[Trace] = None, budget: int = DEFAULT_BUDGET,
                  check: bool = True) -> Tuple[Allocation, Trace]:
    """Run the loop from a seed allocation until no step applies.

    Every fired step is checked against Properties 1-2, the size bound, the
    2/3 bound on group minima, and (for S9_3/S9_4) configuration non-repetition.
    The output is checked against Properties 1-4 and the source condition.
    """
    if trace is None:
        trace = Trace()
    if not trace.records:
        trace.append({"step": "seed", "algo": "ppa", **snapshot(X0)})
    X = X0
    best_minima = group_minima(X) if X.pool else None
    seen = set()
    for it in range(budget):
        config = X.configuration()
        fired = ppa_step(X, types_mode, trace)
        if fired is None:
            break
        step, Y, actors = fired
        record = {"step": step.value, "iter": it, "actors": actors, "pool_size": len(Y.pool)}
        if step in PSEUDO_STEPS:
            if config in seen:
                raise DiagnosticError(f"configuration before {step.value} repeated at iteration {it}", trace)
            seen.add(config)
            record["config_hash"] = config_hash(config)
        minima = group_minima(Y)
        record["group_minima"] = [format_fraction(v.base) for v in minima]
        record.update(snapshot(Y))
        trace.append(record)
        if check:
            problems = Y.partition_errors()
            if Y.size > 2:
                problems.append(f"allocation size {Y.size} exceeds 2")
            if not ordering_holds(Y):
                problems.append("ordering invariant broken")
            problems += property_violations(Y)
            for t, (now, best) in enumerate(zip(minima, best_minima)):
                if now < best * TWO_THIRDS:
                    problems.append(f"group {t} minimum fell below 2/3 of an earlier minimum")
            if problems:
                raise DiagnosticError(f"after {step.value} (iteration {it}): " + "; ".join(problems), trace)
        best_minima = [max(a, b) for a, b in zip(minima, best_minima)]
        X = Y
    else:
        raise DiagnosticError(f"loop exceeded {budget} steps", trace)
    if check:
        problems = property_violations(X, final=True) + source_violations(X)
        if problems:
            raise DiagnosticError("loop output: " + "; ".join(problems), trace)
    return X, trace
