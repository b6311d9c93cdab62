"""Complete 2/3-EFX allocations for instances with at most four agent types."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

from .core import (TWO_THIRDS, Allocation, Certificate, ContractError, DiagnosticError, InputError,
                   Instance, check_alpha_efx, critical_goods, enforce_ordering_invariant,
                   is_alpha_efx_toward, leading_agents, pareto_dominates)
from .graphs import ENHANCED, EnvyGraph, build_envy_graph, sources
from .ppa import run_ppa_types, seed_allocation
from .resolution import DEFAULT_BUDGET, ece_completion
from .trace import Trace, snapshot


class CriticalCase(str, Enum):
    TwoCritTwoSources = "TwoCritTwoSources"
    AtMostTwoCritOneSource = "AtMostTwoCritOneSource"
    ThreeCrit_SingletonD = "ThreeCrit_SingletonD"
    ThreeCrit_BigD_keepAll = "ThreeCrit_BigD_keepAll"
    ThreeCrit_BigD_split = "ThreeCrit_BigD_split"


@dataclass
class CriticalPlacement:
    case: Optional[CriticalCase]
    bindings: Dict[str, int] = field(default_factory=dict)
    goods: Dict[int, int] = field(default_factory=dict)  # good -> receiving agent


def _check_preconditions(X: Allocation, crit: Dict[int, frozenset], srcs: List[int]) -> None:
    inst = X.instance
    if len(crit) > 3:
        raise ContractError(f"{len(crit)} critical goods, at most 3 expected")
    claimed_by = {}
    for g, who in crit.items():
        for a in who:
            t = inst.agent_type[a]
            if claimed_by.setdefault(t, g) != g:
                raise ContractError(f"group {t} claims two critical goods")
            if a in srcs:
                raise ContractError(f"source {a} has critical good {g}")
    for t in claimed_by:
        for s in srcs:
            if inst.agent_type[s] == t:
                raise ContractError(f"source group {t} claims a critical good")
            # no claimant is close to envying any source
            for j in inst.groups[t]:
                if not X.value(j, X.bundles[s]) < X.value(j) * TWO_THIRDS:
                    raise ContractError(f"agent {j} values source {s}'s bundle at 2/3 of her own or more")


def allocate_criticals(X: Allocation, C: Optional[Iterable[int]] = None,
                       Ge: Optional[EnvyGraph] = None) -> Tuple[Allocation, CriticalPlacement]:
    """Hand out the critical pool goods to sources of the enhanced graph.

    The result is checked to be 2/3-EFX (perturbed) and to weakly Pareto-dominate ``X``.
    """
    crit = critical_goods(X)
    C = sorted(crit if C is None else C)
    if not C:
        return X, CriticalPlacement(None)
    if set(C) != set(crit):
        raise ContractError(f"{C} is not the critical good set {sorted(crit)}")
    if Ge is None:
        Ge = build_envy_graph(X, ENHANCED)
    srcs = sources(Ge)
    if not srcs:
        raise ContractError("enhanced graph has no source")
    _check_preconditions(X, crit, srcs)
    inst = X.instance
    d1 = srcs[0]
    if len(C) == 2 and len(srcs) >= 2:
        place = CriticalPlacement(CriticalCase.TwoCritTwoSources, {"s1": srcs[0], "s2": srcs[1]},
                                  {C[0]: srcs[0], C[1]: srcs[1]})
    elif len(C) <= 2:
        place = CriticalPlacement(CriticalCase.AtMostTwoCritOneSource, {"d1": d1}, {g: d1 for g in C})
    else:
        D = inst.groups[inst.agent_type[d1]]
        if len(D) == 1:
            place = CriticalPlacement(CriticalCase.ThreeCrit_SingletonD, {"d1": d1}, {g: d1 for g in C})
        else:
            if d1 != D[0]:
                raise ContractError(f"source {d1} is not the leading agent of its group")
            d2 = D[1]
            target = X.bundles[d1] | frozenset(C)
            probe = list(X.bundles)
            probe[d1] = target
            trial = Allocation(inst, probe, X.pool - set(C))
            if is_alpha_efx_toward(trial, d2, d1, TWO_THIRDS, perturbed=True):
                place = CriticalPlacement(CriticalCase.ThreeCrit_BigD_keepAll, {"d1": d1, "d2": d2},
                                          {g: d1 for g in C})
            else:
                h = min(C, key=lambda g: X.value(d1, (g,)))
                goods = {g: d1 for g in C}
                goods[h] = d2
                place = CriticalPlacement(CriticalCase.ThreeCrit_BigD_split, {"d1": d1, "d2": d2}, goods)
    bundles = list(X.bundles)
    for g, a in place.goods.items():
        bundles[a] = bundles[a] | {g}
    Y = enforce_ordering_invariant(Allocation(inst, bundles, X.pool - set(C)))
    cert = check_alpha_efx(Y, TWO_THIRDS, perturbed=True)
    if not cert:
        raise DiagnosticError(f"{place.case.value} placement is not 2/3-EFX: {cert.violations[:3]}")
    if not pareto_dominates(Y, X, strict=False):
        raise DiagnosticError(f"{place.case.value} placement hurt some agent")
    return Y, place


@dataclass
class FewTypesResult:
    allocation: Allocation
    certificate: Certificate
    trace: Trace
    case: Optional[CriticalCase]
    loop_output: Allocation

    def __iter__(self):
        return iter((self.allocation, self.certificate, self.trace))


def few_types_allocate(instance: Instance, trace: Optional[Trace] = None,
                       budget: int = DEFAULT_BUDGET) -> FewTypesResult:
    """Seed, run the property-preserving loop, place critical goods, then finish by envy-cycle elimination.

    Unpacks as ``(allocation, certificate, trace)``.
    """
    if instance.k > 4:
        raise InputError(f"{instance.k} types: this algorithm handles at most 4; use the charity module")
    trace = Trace() if trace is None else trace
    X0 = seed_allocation(instance)
    trace.append({"step": "seed", "algo": "fewtypes", **snapshot(X0)})
    X, _ = run_ppa_types(instance, X0, True, trace, budget)
    case = None
    Y = X
    if Y.pool:
        Y, place = allocate_criticals(X)
        case = place.case
        trace.append({"step": "criticals", "case": case.value if case else None,
                      "placed": {str(g): a for g, a in sorted(place.goods.items())},
                      "bindings": place.bindings, **snapshot(Y)})
        Y = ece_completion(Y, TWO_THIRDS, trace=trace, budget=budget)
    cert = check_alpha_efx(Y, TWO_THIRDS)
    cert.params["case"] = case.value if case else None
    trace.append({"step": "done", "pass": cert.passed, **snapshot(Y)})
    if Y.pool:
        raise DiagnosticError("output is incomplete", trace)
    return FewTypesResult(Y, cert, trace, case, X)
