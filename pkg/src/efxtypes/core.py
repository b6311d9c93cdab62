"""Exact values, k-type instances, allocations and the fairness predicates.

Every good ``g`` carries an infinitesimal tag ``2**g``.  A bundle value is the
pair ``(base, tag)`` compared lexicographically, which is the same as adding
``eps * sum(2**g)`` to every valuation for a small enough ``eps``.  No two
distinct bundles ever compare equal for the same type, so every instance is
non-degenerate without having to compute an explicit perturbation bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

Rational = Union[int, Fraction]
Bundle = FrozenSet[int]

TWO_THIRDS = Fraction(2, 3)
ONE_HALF = Fraction(1, 2)
THREE_HALVES = Fraction(3, 2)


class InputError(ValueError):
    """Malformed input: bad indices, bad shapes, bad parameters."""


class ContractError(RuntimeError):
    """A precondition of an internal operation was not met (a bug upstream)."""


class DiagnosticError(RuntimeError):
    """An algorithm broke one of its proven invariants or ran out of budget.

    ``trace`` holds whatever was recorded up to the failure.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True, order=True)
class Value:
    """A perturbed utility ``base + tag * eps`` with ``eps`` infinitesimal."""

    base: Fraction
    tag: Fraction

    def __add__(self, other: "Value") -> "Value":
        return Value(self.base + other.base, self.tag + other.tag)

    def __sub__(self, other: "Value") -> "Value":
        return Value(self.base - other.base, self.tag - other.tag)

    def __mul__(self, scalar: Rational) -> "Value":
        return Value(self.base * scalar, self.tag * scalar)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Value({self.base}, tag={self.tag})"


ZERO = Value(Fraction(0), Fraction(0))


def to_fraction(x) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string.  Floats are rejected."""
    if isinstance(x, bool):
        raise InputError(f"not a rational: {x!r}")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if "." in s or "e" in s.lower():
            raise InputError(f"decimal literal {x!r} rejected; write rationals as 'p/q'")
        try:
            return Fraction(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {x!r}") from exc
    raise InputError(f"not a rational: {x!r} (floats are not accepted)")


def format_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Params:
    alpha: Fraction = TWO_THIRDS
    beta: Fraction = ONE_HALF
    epsilon: Fraction = ONE_HALF

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise InputError("alpha must lie in (0, 1]")
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0, 1)")
        if not 0 < self.epsilon <= ONE_HALF:
            raise InputError("epsilon must lie in (0, 1/2]")


class Instance:
    """An additive instance whose agents fall into ``k`` groups of identical valuations.

    Agents are numbered flat in ``(type, position)`` order.
    """

    def __init__(self, type_values: Sequence[Sequence[Rational]], group_sizes: Sequence[int]):
        if len(type_values) != len(group_sizes):
            raise InputError("one value row per type is required")
        if not type_values:
            raise InputError("at least one type is required")
        rows = tuple(tuple(to_fraction(v) for v in row) for row in type_values)
        m = len(rows[0])
        if m < 1:
            raise InputError("at least one good is required")
        for row in rows:
            if len(row) != m:
                raise InputError("all value rows must have the same length")
            if any(v < 0 for v in row):
                raise InputError("values must be non-negative")
        sizes = tuple(int(p) for p in group_sizes)
        if any(p < 1 for p in sizes):
            raise InputError("every group needs at least one agent")
        self.type_values: Tuple[Tuple[Fraction, ...], ...] = rows
        self.group_sizes: Tuple[int, ...] = sizes
        self.m = m
        self.k = len(rows)
        self.n = sum(sizes)
        self.agent_type: Tuple[int, ...] = tuple(t for t, p in enumerate(sizes) for _ in range(p))
        members: List[Tuple[int, ...]] = []
        start = 0
        for p in sizes:
            members.append(tuple(range(start, start + p)))
            start += p
        self.groups: Tuple[Tuple[int, ...], ...] = tuple(members)
        self._cache: Dict[Tuple[int, Bundle], Value] = {}

    def __repr__(self) -> str:
        return f"Instance(k={self.k}, n={self.n}, m={self.m}, sizes={list(self.group_sizes)})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, Instance) and self.type_values == other.type_values
                and self.group_sizes == other.group_sizes)

    def __hash__(self) -> int:
        return hash((self.type_values, self.group_sizes))

    def label(self, agent: int) -> str:
        t = self.agent_type[agent]
        return f"{t}:{agent - self.groups[t][0]}"

    def type_value(self, t: int, bundle: Iterable[int]) -> Value:
        bundle = frozenset(bundle)
        key = (t, bundle)
        v = self._cache.get(key)
        if v is None:
            row = self.type_values[t]
            v = Value(sum((row[g] for g in bundle), Fraction(0)), Fraction(sum(1 << g for g in bundle)))
            self._cache[key] = v
        return v

    def value(self, agent: int, bundle: Iterable[int]) -> Value:
        return self.type_value(self.agent_type[agent], bundle)


def value_of(instance: Instance, t: int, S: Iterable[int]) -> Value:
    """Perturbed value of bundle ``S`` for type ``t``."""
    S = frozenset(S)
    if not 0 <= t < instance.k:
        raise InputError(f"type index {t} out of range")
    bad = [g for g in S if not 0 <= g < instance.m]
    if bad:
        raise InputError(f"good indices out of range: {sorted(bad)}")
    return instance.type_value(t, S)


@dataclass
class Allocation:
    """Per-agent bundles plus the pool of unallocated goods."""

    instance: Instance
    bundles: List[Bundle]
    pool: Bundle = field(default_factory=frozenset)

    def __post_init__(self):
        self.bundles = [frozenset(b) for b in self.bundles]
        self.pool = frozenset(self.pool)

    @classmethod
    def empty(cls, instance: Instance) -> "Allocation":
        return cls(instance, [frozenset()] * instance.n, frozenset(range(instance.m)))

    def copy(self) -> "Allocation":
        return Allocation(self.instance, list(self.bundles), self.pool)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Allocation) and self.bundles == other.bundles
                and self.pool == other.pool)

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def size(self) -> int:
        return max((len(b) for b in self.bundles), default=0)

    @property
    def is_complete(self) -> bool:
        return not self.pool

    def value(self, agent: int, bundle: Optional[Iterable[int]] = None) -> Value:
        """``v_agent(bundle)``; the agent's own bundle when ``bundle`` is omitted."""
        if bundle is None:
            bundle = self.bundles[agent]
        return self.instance.value(agent, bundle)

    def utilities(self) -> List[Value]:
        return [self.value(a) for a in range(self.n)]

    def partition_errors(self) -> List[str]:
        errors = []
        if len(self.bundles) != self.instance.n:
            errors.append(f"expected {self.instance.n} bundles, got {len(self.bundles)}")
        seen: Dict[int, str] = {}
        owners = [(f"agent {a}", b) for a, b in enumerate(self.bundles)] + [("pool", self.pool)]
        for owner, goods in owners:
            for g in goods:
                if not 0 <= g < self.instance.m:
                    errors.append(f"{owner} holds unknown good {g}")
                elif g in seen:
                    errors.append(f"good {g} held by both {seen[g]} and {owner}")
                else:
                    seen[g] = owner
        missing = sorted(set(range(self.instance.m)) - set(seen))
        if missing:
            errors.append(f"goods {missing} are neither allocated nor pooled")
        return errors

    def validate(self) -> None:
        errors = self.partition_errors()
        if errors:
            raise InputError("not an allocation: " + "; ".join(errors))

    def configuration(self) -> Tuple[Tuple[Tuple[int, ...], ...], ...]:
        """Per group, its bundles sorted by the group's value, each as a sorted tuple."""
        inst = self.instance
        out = []
        for t, members in enumerate(inst.groups):
            bs = sorted((self.bundles[a] for a in members), key=lambda b: inst.type_value(t, b))
            out.append(tuple(tuple(sorted(b)) for b in bs))
        return tuple(out)


# ---------------------------------------------------------------------------
# fairness predicates

def _exact(v: Value, perturbed: bool):
    return v if perturbed else v.base


def is_alpha_efx_toward(X: Allocation, a: int, b: int, alpha: Rational = TWO_THIRDS,
                        perturbed: bool = False) -> bool:
    """Is ``a`` alpha-EFX toward ``b``?

    Uses ``v_a(X_a) >= alpha * (v_a(X_b) - min_h v_a(h))``, which for additive
    valuations is the same as checking every single-good removal.  With
    ``perturbed=False`` (the default) the real values are compared.
    """
    Xb = X.bundles[b]
    if len(Xb) <= 1:
        return True
    own = X.value(a)
    other = X.value(a, Xb)
    cheapest = min(X.value(a, (h,)) for h in Xb)
    return _exact(own, perturbed) >= _exact((other - cheapest) * alpha, perturbed)


@dataclass
class Certificate:
    """Outcome of an exact check.  ``violations`` is empty iff ``passed``."""

    kind: str
    passed: bool
    violations: List[dict] = field(default_factory=list)
    params: Dict[str, str] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"kind": self.kind, "pass": self.passed, "params": dict(self.params),
                "violations": list(self.violations)}


def check_alpha_efx(X: Allocation, alpha: Rational = TWO_THIRDS, perturbed: bool = False) -> Certificate:
    """Certify that every agent is alpha-EFX toward every other agent.

    On failure every violating ``(a, b, h)`` triple is listed with its exact
    values: ``own = v_a(X_a)`` and ``rest = v_a(X_b \\ h)``.
    """
    alpha = Fraction(alpha)
    violations = []
    for a in range(X.n):
        own = X.value(a)
        for b in range(X.n):
            if a == b or len(X.bundles[b]) <= 1 or is_alpha_efx_toward(X, a, b, alpha, perturbed):
                continue
            for h in sorted(X.bundles[b]):
                rest = X.value(a, X.bundles[b] - {h})
                if _exact(own, perturbed) < _exact(rest * alpha, perturbed):
                    violations.append({"a": a, "b": b, "h": h,
                                       "own": format_fraction(own.base),
                                       "rest": format_fraction(rest.base)})
    return Certificate("alpha-efx", not violations, violations,
                       {"alpha": format_fraction(alpha), "perturbed": str(perturbed).lower()})


def check_charity(X: Allocation, alpha: Rational = TWO_THIRDS, heavy_epsilon: Optional[Rational] = None,
                  perturbed: bool = False) -> Certificate:
    """Certify alpha-EFX plus a bound on envy toward the pool.

    Without ``heavy_epsilon`` each agent must value her bundle at least as
    much as the whole pool; with it, at least ``(1 - eps)`` times the pool.
    """
    cert = check_alpha_efx(X, alpha, perturbed)
    factor = Fraction(1) if heavy_epsilon is None else 1 - Fraction(heavy_epsilon)
    violations = list(cert.violations)
    if X.pool:
        for a in range(X.n):
            own = X.value(a)
            pooled = X.value(a, X.pool)
            if _exact(own, perturbed) < _exact(pooled * factor, perturbed):
                violations.append({"a": a, "pool": True, "own": format_fraction(own.base),
                                   "pool_value": format_fraction(pooled.base)})
    params = dict(cert.params)
    if heavy_epsilon is not None:
        params["epsilon"] = format_fraction(Fraction(heavy_epsilon))
    return Certificate("charity", not violations, violations, params)


def is_critical(X: Allocation, a: int, g: int, beta: Rational = ONE_HALF) -> bool:
    """Is pool good ``g`` beta-critical for ``a``: ``v_a(g) > beta * v_a(X_a)``."""
    if g not in X.pool:
        raise InputError(f"good {g} is not in the pool")
    return X.value(a, (g,)) > X.value(a) * beta


def critical_goods(X: Allocation, beta: Rational = ONE_HALF) -> Dict[int, FrozenSet[int]]:
    """Map each pool good that is critical for someone to its claimants."""
    out = {}
    for g in sorted(X.pool):
        claimants = frozenset(a for a in range(X.n) if is_critical(X, a, g, beta))
        if claimants:
            out[g] = claimants
    return out


def enforce_ordering_invariant(X: Allocation) -> Allocation:
    """Sort bundles inside each group by the group's (perturbed) value, ascending."""
    inst = X.instance
    bundles = list(X.bundles)
    for t, members in enumerate(inst.groups):
        ordered = sorted((X.bundles[a] for a in members), key=lambda b: inst.type_value(t, b))
        for a, b in zip(members, ordered):
            bundles[a] = b
    return Allocation(inst, bundles, X.pool)


def ordering_holds(X: Allocation) -> bool:
    inst = X.instance
    for t, members in enumerate(inst.groups):
        vals = [inst.type_value(t, X.bundles[a]) for a in members]
        if any(x > y for x, y in zip(vals, vals[1:])):
            return False
    return True


def leading_agents(X: Allocation) -> List[int]:
    """The first (least-valued) agent of every group."""
    if not ordering_holds(X):
        raise ContractError("ordering invariant violated; call enforce_ordering_invariant first")
    return [members[0] for members in X.instance.groups]


def explicit_perturbation(instance: Instance, epsilon: Rational) -> Instance:
    """Fold the tags into the base values: ``v'(g) = v(g) + epsilon * 2**g``."""
    epsilon = to_fraction(epsilon)
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    rows = [[v + epsilon * (1 << g) for g, v in enumerate(row)] for row in instance.type_values]
    return Instance(rows, instance.group_sizes)


def pareto_dominates(Y: Allocation, X: Allocation, strict: bool = True) -> bool:
    """Per group, compare sorted utility vectors (agents of a group are interchangeable)."""
    inst = X.instance
    better = False
    for t, members in enumerate(inst.groups):
        ys = sorted(inst.type_value(t, Y.bundles[a]) for a in members)
        xs = sorted(inst.type_value(t, X.bundles[a]) for a in members)
        for y, x in zip(ys, xs):
            if y < x:
                return False
            if y > x:
                better = True
    return better or not strict
