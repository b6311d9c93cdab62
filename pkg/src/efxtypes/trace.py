"""Step-by-step run logs, written as JSON lines."""
from __future__ import annotations

import json
from typing import Iterable, List, Optional

from .core import Allocation


def snapshot(X: Allocation) -> dict:
    return {"bundles": [sorted(b) for b in X.bundles], "pool": sorted(X.pool)}


class Trace:
    """An append-only list of step records (plain JSON-able dicts)."""

    def __init__(self, records: Optional[Iterable[dict]] = None):
        self.records: List[dict] = list(records or [])

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record: dict) -> None:
        self.records.append(record)

    def steps(self, name: str) -> List[dict]:
        return [r for r in self.records if r.get("step") == name]

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path) as fh:
            return cls(json.loads(line) for line in fh if line.strip())
