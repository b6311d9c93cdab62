"""Cycle and path resolution, the termination potential, and ECE completion."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (ONE_HALF, THREE_HALVES, TWO_THIRDS, Allocation, Bundle, ContractError,
                   DiagnosticError, Value, critical_goods, enforce_ordering_invariant,
                   format_fraction, is_alpha_efx_toward, pareto_dominates)
from .graphs import (ENHANCED, PLAIN, RED, REDUCED, EnvyGraph, build_envy_graph, find_cycle,
                     find_path, sources)
from .trace import Trace, snapshot

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 6


def weight(size: int) -> Fraction:
    return Fraction(1) if size == 1 else THREE_HALVES


def factor(X: Allocation, a: int, bundle: Optional[Bundle] = None) -> Value:
    """One agent's contribution ``w(|B|) * v_a(B)`` to the potential."""
    if bundle is None:
        bundle = X.bundles[a]
    return X.value(a, bundle) * weight(len(bundle))


@dataclass(frozen=True)
class Potential:
    """The potential under perturbed values, as a polynomial in the infinitesimal.

    ``coeffs[i]`` multiplies ``eps**i``; comparison is lexicographic from the
    constant term up, which is the order for an infinitesimal ``eps``.
    ``coeffs[0]`` is the product of the real (unperturbed) factors.
    """

    coeffs: Tuple[Fraction, ...]

    @property
    def base(self) -> Fraction:
        return self.coeffs[0]

    def _key(self, other: "Potential"):
        width = max(len(self.coeffs), len(other.coeffs))
        pad = lambda c: c + (Fraction(0),) * (width - len(c))
        return pad(self.coeffs), pad(other.coeffs)

    def __lt__(self, other: "Potential") -> bool:
        a, b = self._key(other)
        return a < b

    def __le__(self, other: "Potential") -> bool:
        a, b = self._key(other)
        return a <= b

    def __gt__(self, other: "Potential") -> bool:
        return other < self

    def __ge__(self, other: "Potential") -> bool:
        return other <= self

    def __eq__(self, other) -> bool:
        if not isinstance(other, Potential):
            return NotImplemented
        a, b = self._key(other)
        return a == b

    def __hash__(self) -> int:
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        return hash(tuple(c))

    def to_json(self) -> List[str]:
        return [format_fraction(c) for c in self.coeffs]


def potential_phi(X: Allocation) -> Potential:
    """Product over agents with non-empty bundles of ``w(|X_a|) * v_a(X_a)``."""
    poly = [Fraction(1)]
    for a in range(X.n):
        if not X.bundles[a]:
            continue
        f = factor(X, a)
        nxt = [Fraction(0)] * (len(poly) + 1)
        for i, c in enumerate(poly):
            nxt[i] += c * f.base
            nxt[i + 1] += c * f.tag
        poly = nxt
    return Potential(tuple(poly))


def utility_sum(X: Allocation) -> Value:
    total = Value(Fraction(0), Fraction(0))
    for u in X.utilities():
        total = total + u
    return total


def _check_cycle(G: EnvyGraph, C: Sequence[int]) -> None:
    if len(C) < 2 or len(set(C)) != len(C):
        raise ContractError(f"{list(C)} is not a simple cycle")
    for i, a in enumerate(C):
        if not G.has_edge(a, C[(i + 1) % len(C)]):
            raise ContractError(f"edge ({a}, {C[(i + 1) % len(C)]}) of cycle not in {G.kind} graph")


def cycle_resolution(X: Allocation, G: EnvyGraph, C: Sequence[int]) -> Allocation:
    """Every agent on ``C`` takes her successor's bundle; others keep theirs."""
    _check_cycle(G, C)
    bundles = list(X.bundles)
    for i, a in enumerate(C):
        bundles[a] = X.bundles[C[(i + 1) % len(C)]]
    if G.kind in (REDUCED, ENHANCED):
        # per-factor monotonicity behind the potential argument
        strict = False
        for i, a in enumerate(C):
            old, new = factor(X, a), factor(X, a, bundles[a])
            if new < old:
                label = G.edges[(a, C[(i + 1) % len(C)])]
                raise DiagnosticError(f"potential factor of agent {a} fell across a {label} edge")
            strict = strict or new > old
        if not strict:
            raise DiagnosticError("cycle resolution left every potential factor unchanged")
    return enforce_ordering_invariant(Allocation(X.instance, bundles, X.pool))


def all_cycles_resolution(X: Allocation, kind: str, trace: Optional[Trace] = None,
                          budget: int = DEFAULT_BUDGET) -> Allocation:
    """Resolve cycles of the ``kind`` graph until it is acyclic.

    The potential (reduced/enhanced) or utility sum (plain) must rise strictly
    at every resolution; a plain run must also Pareto-dominate its input.
    """
    start = X
    for _ in range(budget):
        G = build_envy_graph(X, kind)
        C = find_cycle(G)
        if C is None:
            if kind == PLAIN and X is not start and not pareto_dominates(X, start):
                raise DiagnosticError("envy-cycle elimination did not Pareto-improve", trace)
            return X
        before = potential_phi(X)
        sum_before = utility_sum(X)
        Y = cycle_resolution(X, G, C)
        after = potential_phi(Y)
        if kind == PLAIN:
            if not utility_sum(Y) > sum_before:
                raise DiagnosticError("utility sum did not increase on a plain cycle", trace)
        elif not after > before:
            raise DiagnosticError(f"potential did not increase on a {kind} cycle", trace)
        else:
            # whoever moved along the cycle is 2/3-EFX toward everyone, and EFX if she now holds one good
            for a in C:
                alpha = 1 if len(Y.bundles[a]) == 1 else TWO_THIRDS
                if not all(is_alpha_efx_toward(Y, a, b, alpha, perturbed=True) for b in range(Y.n) if b != a):
                    raise DiagnosticError(f"agent {a} is not {alpha}-EFX after a {kind} resolution", trace)
        if before.base == after.base and kind != PLAIN:
            log.debug("potential rose only in the perturbation on cycle %s", C)
        if trace is not None:
            trace.append({"step": "cycle_resolution", "kind": kind, "cycle": list(C),
                          "red_edges": sum(1 for i, a in enumerate(C)
                                           if G.edges[(a, C[(i + 1) % len(C)])] == RED),
                          "phi_before": before.to_json(), "phi_after": after.to_json(),
                          "pool_delta": {"out": [], "in": []}, **snapshot(Y)})
        X = Y
    raise DiagnosticError(f"all_cycles_resolution exceeded {budget} resolutions", trace)


def path_resolution(X: Allocation, G: EnvyGraph, pi: Sequence[int]) -> Dict[int, Bundle]:
    """New bundles for ``pi[:-1]``: each agent takes the bundle of the next one.

    The last agent's bundle is left for the caller to reassign.
    """
    if len(set(pi)) != len(pi) or not pi:
        raise ContractError(f"{list(pi)} is not a simple path")
    for a, b in zip(pi, pi[1:]):
        if not G.has_edge(a, b):
            raise ContractError(f"edge ({a}, {b}) of path not in {G.kind} graph")
    return {a: X.bundles[b] for a, b in zip(pi, pi[1:])}


def path_resolution_star(X: Allocation, G: EnvyGraph, pi: Sequence[int]) -> Allocation:
    """Shift bundles along ``pi`` and give its last agent her favourite good of
    the source's bundle together with her favourite pool good.

    ``pi`` must start at a 2-good source of the reduced graph; the source's
    leftover good returns to the pool.
    """
    s, i = pi[0], pi[-1]
    Xs = X.bundles[s]
    if len(Xs) != 2:
        raise ContractError(f"path source {s} holds {len(Xs)} goods, expected 2")
    if s not in sources(build_envy_graph(X, REDUCED)):
        raise ContractError(f"path start {s} is not a source of the reduced graph")
    if not X.pool:
        raise ContractError("path_resolution_star needs a non-empty pool")
    g_s = max(Xs, key=lambda g: X.value(i, (g,)))
    g_star = max(X.pool, key=lambda g: X.value(i, (g,)))
    bundles = list(X.bundles)
    for a, b in path_resolution(X, G, pi).items():
        bundles[a] = b
    bundles[i] = frozenset((g_star, g_s))
    pool = (X.pool | Xs) - {g_star, g_s}
    return enforce_ordering_invariant(Allocation(X.instance, bundles, pool))


def singleton_pool(X: Allocation) -> Allocation:
    """Place the single pool good with a singleton agent who values it above
    2/3 of her bundle, via a reduced-graph path from a source."""
    if len(X.pool) != 1:
        raise ContractError(f"singleton_pool needs exactly one pool good, found {len(X.pool)}")
    (g,) = X.pool
    Gr = build_envy_graph(X, REDUCED)
    srcs = sources(Gr)
    if any(len(X.bundles[s]) == 1 for s in srcs):
        raise ContractError("a reduced-graph source holds a single good")
    for i in range(X.n):
        if len(X.bundles[i]) == 1 and X.value(i, (g,)) > X.value(i) * TWO_THIRDS:
            break
    else:
        raise ContractError("no singleton agent values the pool good above 2/3 of her bundle")
    if i in srcs:
        raise ContractError(f"agent {i} is a source of the reduced graph")
    for s in srcs:
        pi = find_path(Gr, s, i)
        if pi is not None:
            return path_resolution_star(X, Gr, pi)
    raise ContractError(f"agent {i} is unreachable from every reduced-graph source")


def ece_completion(X: Allocation, alpha=TWO_THIRDS, beta=ONE_HALF, trace: Optional[Trace] = None,
                   budget: int = DEFAULT_BUDGET) -> Allocation:
    """Complete a critical-free partial allocation by envy-cycle elimination.

    Each round makes the plain envy graph acyclic and hands the first source
    her favourite pool good.  The result is min(alpha, 1/(1+beta))-EFX.
    """
    crit = critical_goods(X, beta)
    if crit:
        g, who = next(iter(crit.items()))
        raise ContractError(f"pool good {g} is critical for agents {sorted(who)}")
    start = X
    for _ in range(budget):
        X = all_cycles_resolution(X, PLAIN, trace)
        if not X.pool:
            if X is not start and not pareto_dominates(X, start):
                raise DiagnosticError("completion did not Pareto-improve", trace)
            return X
        s = sources(build_envy_graph(X, PLAIN))[0]
        g = max(X.pool, key=lambda h: X.value(s, (h,)))
        bundles = list(X.bundles)
        bundles[s] = bundles[s] | {g}
        X = enforce_ordering_invariant(Allocation(X.instance, bundles, X.pool - {g}))
        if trace is not None:
            trace.append({"step": "ece_give", "agent": s, "good": g, "pool_delta": {"out": [g], "in": []},
                          **snapshot(X)})
    raise DiagnosticError(f"ece_completion exceeded {budget} rounds", trace)
