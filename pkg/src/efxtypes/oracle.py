"""Brute-force ground truth for tiny instances, and trace replay."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterator, List, Optional, Sequence

from .core import (TWO_THIRDS, Allocation, ContractError, DiagnosticError, InputError, Instance,
                   check_alpha_efx, check_charity, enforce_ordering_invariant, to_fraction)
from .graphs import PLAIN, build_envy_graph, find_cycle, sources
from .trace import Trace

GUARD = 10 ** 8


def _digits(instance: Instance, complete_only: bool) -> int:
    radix = instance.n if complete_only else instance.n + 1
    if (instance.n + 1) ** instance.m > GUARD:
        raise InputError(f"(n+1)^m = {(instance.n + 1) ** instance.m} exceeds the oracle guard {GUARD}")
    return radix


def enumerate_assignments(instance: Instance, complete_only: bool = True) -> Iterator[List[int]]:
    """Every map goods -> agents (digit ``n`` means pool), good 0 as the fastest digit."""
    radix = _digits(instance, complete_only)
    m = instance.m
    digits = [0] * m
    while True:
        yield list(digits)
        i = 0
        while i < m:
            digits[i] += 1
            if digits[i] < radix:
                break
            digits[i] = 0
            i += 1
        if i == m:
            return


def _to_allocation(instance: Instance, digits: Sequence[int]) -> Allocation:
    bundles = [set() for _ in range(instance.n)]
    pool = set()
    for g, a in enumerate(digits):
        (pool if a == instance.n else bundles[a]).add(g)
    return Allocation(instance, bundles, pool)


def brute_force_exists_alpha_efx(instance: Instance, alpha=TWO_THIRDS,
                                 complete_only: bool = True) -> Optional[Allocation]:
    """First allocation in enumeration order that is alpha-EFX (and envy-free toward the pool if partial)."""
    alpha = to_fraction(alpha)
    rows = instance.type_values
    types = instance.agent_type
    n = instance.n
    for digits in enumerate_assignments(instance, complete_only):
        # real-valued sums per (agent type, holder)
        sums = [[Fraction(0)] * (n + 1) for _ in range(instance.k)]
        lows = [[None] * (n + 1) for _ in range(instance.k)]
        sizes = [0] * (n + 1)
        for g, a in enumerate(digits):
            sizes[a] += 1
            for t in range(instance.k):
                v = rows[t][g]
                sums[t][a] += v
                if lows[t][a] is None or v < lows[t][a]:
                    lows[t][a] = v
        ok = True
        for a in range(n):
            t = types[a]
            own = sums[t][a]
            for b in range(n):
                if b != a and sizes[b] > 1 and own < alpha * (sums[t][b] - lows[t][b]):
                    ok = False
                    break
            if ok and sizes[n] and own < sums[t][n]:
                ok = False
            if not ok:
                break
        if ok:
            X = _to_allocation(instance, digits)
            cert = check_charity(X, alpha) if X.pool else check_alpha_efx(X, alpha)
            if not cert:
                raise DiagnosticError("oracle and checker disagree")
            return X
    return None


def brute_force_check_efx(X: Allocation, alpha=TWO_THIRDS) -> List[tuple]:
    """Violations ``(a, b, h)`` found by removing each good explicitly, raw real values only."""
    alpha = to_fraction(alpha)
    rows = X.instance.type_values
    out = []
    for a in range(X.n):
        row = rows[X.instance.agent_type[a]]
        own = sum((row[g] for g in X.bundles[a]), Fraction(0))
        for b in range(X.n):
            if a == b:
                continue
            for h in sorted(X.bundles[b]):
                rest = sum((row[g] for g in X.bundles[b] if g != h), Fraction(0))
                if own < alpha * rest:
                    out.append((a, b, h))
    return out


# ---------------------------------------------------------------------------
# trace replay

def _state(instance: Instance, rec: dict) -> Allocation:
    return Allocation(instance, [frozenset(b) for b in rec["bundles"]], frozenset(rec["pool"]))


class _Mismatch(Exception):
    pass


def verify_trace(trace, instance: Instance) -> dict:
    """Replay a run record by record and re-check each step's invariants.

    Stops at the first divergence.  Returns ``{"pass", "records", "checked", "mismatches"}``.
    """
    from .charity import charity_step
    from .fewtypes import allocate_criticals
    from .ppa import PSEUDO_STEPS, StepId, group_minima, ppa_step, property_violations, seed_allocation
    from .resolution import cycle_resolution, potential_phi

    records = list(trace.records if isinstance(trace, Trace) else trace)
    report = {"pass": True, "records": len(records), "checked": 0, "mismatches": []}
    if not records:
        return report
    step_names = {s.value for s in StepId}

    def fail(idx, rec, msg):
        report["pass"] = False
        report["mismatches"].append({"index": idx, "step": rec.get("step"), "message": msg})

    def same(idx, rec, Y, what):
        if "bundles" in rec and _state(instance, rec) != Y:
            raise _Mismatch(f"{what}: replayed allocation differs from the recorded one")

    seed = records[0]
    if seed.get("step") != "seed":
        fail(0, seed, "first record must be the seed")
        return report
    algo = seed.get("algo", "ppa")
    eps = to_fraction(seed["epsilon"]) if "epsilon" in seed else None
    d = seed.get("d")
    strict = bool(seed.get("strict", False))
    base = cur = seed_allocation(instance)
    seen = set()
    best_minima = group_minima(base)
    try:
        same(0, seed, base, "seed")
    except _Mismatch as exc:
        fail(0, seed, str(exc))
        return report
    for idx, rec in enumerate(records[1:], start=1):
        name = rec.get("step")
        try:
            if name == "cycle_resolution":
                G = build_envy_graph(cur, rec["kind"])
                Y = cycle_resolution(cur, G, rec["cycle"])
                if rec["kind"] != PLAIN and not potential_phi(Y) > potential_phi(cur):
                    raise _Mismatch("potential did not increase")
                same(idx, rec, Y, "cycle")
                cur = Y
            elif name in step_names:
                config = base.configuration()
                fired = ppa_step(base, True)
                if fired is None:
                    raise _Mismatch(f"no step applies, trace says {name}")
                if fired.step.value != name:
                    raise _Mismatch(f"replay fires {fired.step.value}, trace says {name}")
                Y = fired.allocation
                same(idx, rec, Y, name)
                if fired.step in PSEUDO_STEPS:
                    if config in seen:
                        raise _Mismatch("configuration repeated before a pseudo-cycle step")
                    seen.add(config)
                problems = property_violations(Y)
                if Y.size > 2:
                    problems.append("size exceeds 2")
                minima = group_minima(Y)
                if any(now < best * TWO_THIRDS for now, best in zip(minima, best_minima)):
                    problems.append("group minimum fell below 2/3 of an earlier minimum")
                best_minima = [max(x, y) for x, y in zip(minima, best_minima)]
                if problems:
                    raise _Mismatch("; ".join(problems))
                base = cur = Y
            elif name == "criticals":
                Y, place = allocate_criticals(base)
                if (place.case.value if place.case else None) != rec.get("case"):
                    raise _Mismatch(f"replayed case {place.case} differs from {rec.get('case')}")
                same(idx, rec, Y, name)
                base = cur = Y
            elif name == "ece_give":
                G = build_envy_graph(cur, PLAIN)
                if find_cycle(G) is not None:
                    raise _Mismatch("gift made while the envy graph had a cycle")
                s = sources(G)[0]
                g = max(cur.pool, key=lambda h: cur.value(s, (h,)))
                if (s, g) != (rec["agent"], rec["good"]):
                    raise _Mismatch(f"expected agent {s} to take good {g}")
                bundles = list(cur.bundles)
                bundles[s] = bundles[s] | {g}
                Y = enforce_ordering_invariant(Allocation(instance, bundles, cur.pool - {g}))
                same(idx, rec, Y, name)
                base = cur = Y
            elif name == "charity_step":
                step, _ = charity_step(cur, eps, d, strict)
                if step is None or step.rule != rec.get("rule"):
                    raise _Mismatch(f"replayed rule {step and step.rule} differs from {rec.get('rule')}")
                same(idx, rec, step.allocation, name)
                base = cur = step.allocation
            elif name == "done":
                same(idx, rec, cur, name)
                if algo == "fewtypes":
                    if cur.pool or not check_alpha_efx(cur, TWO_THIRDS):
                        raise _Mismatch("final allocation is not a complete 2/3-EFX allocation")
                elif algo == "charity":
                    if not check_charity(cur, 1 - eps, heavy_epsilon=eps):
                        raise _Mismatch("final allocation fails the charity certificate")
            else:
                raise _Mismatch(f"unknown record type {name!r}")
        except _Mismatch as exc:
            fail(idx, rec, str(exc))
            return report
        except (ContractError, DiagnosticError, InputError, KeyError, TypeError) as exc:
            fail(idx, rec, f"{type(exc).__name__}: {exc}")
            return report
        report["checked"] += 1
    return report
