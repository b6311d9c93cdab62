"""JSON forms of instances and allocations.  Rationals travel as ``"p/q"`` strings."""
from __future__ import annotations

import json
from typing import Any

from .core import Allocation, InputError, Instance, format_fraction, to_fraction


def instance_to_json(inst: Instance) -> dict:
    return {"m": inst.m,
            "types": [{"count": p, "values": [_num(v) for v in row]}
                      for p, row in zip(inst.group_sizes, inst.type_values)]}


def _num(v):
    return v.numerator if v.denominator == 1 else format_fraction(v)


def instance_from_json(data: Any) -> Instance:
    try:
        types = data["types"]
        m = data.get("m")
        rows = [[to_fraction(v) for v in t["values"]] for t in types]
        sizes = [t["count"] for t in types]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed instance: {exc}") from exc
    if any(not isinstance(p, int) or isinstance(p, bool) for p in sizes):
        raise InputError("type counts must be integers")
    if m is not None and any(len(r) != m for r in rows):
        raise InputError(f"every value row must have m={m} entries")
    return Instance(rows, sizes)


def allocation_to_json(X: Allocation) -> dict:
    return {"bundles": [sorted(b) for b in X.bundles], "pool": sorted(X.pool)}


def allocation_from_json(inst: Instance, data: Any, validate: bool = True) -> Allocation:
    try:
        bundles = [[int(g) for g in b] for b in data["bundles"]]
        pool = [int(g) for g in data.get("pool", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed allocation: {exc}") from exc
    flat = [g for b in bundles for g in b] + pool
    if len(flat) != len(set(flat)):
        raise InputError("not an allocation: a good appears twice")
    X = Allocation(inst, bundles, pool)
    if validate:
        X.validate()
    return X


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
