"""Plain, reduced and enhanced envy graphs, plus the searches run on them.

Graphs are rebuilt from scratch after every change to an allocation.  All
searches break ties by ascending agent index so traces are reproducible.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .core import TWO_THIRDS, Allocation, ContractError, leading_agents

PLAIN = "plain"
REDUCED = "reduced"
ENHANCED = "enhanced"
KINDS = (PLAIN, REDUCED, ENHANCED)

ENVY = "envy"
RED = "red"


@dataclass
class EnvyGraph:
    kind: str
    nodes: List[int]
    edges: Dict[Tuple[int, int], str] = field(default_factory=dict)

    def __post_init__(self):
        self._succ: Optional[Dict[int, List[int]]] = None

    def successors(self, a: int) -> List[int]:
        if self._succ is None:
            succ: Dict[int, List[int]] = {v: [] for v in self.nodes}
            for (u, v) in sorted(self.edges):
                succ[u].append(v)
            self._succ = succ
        return self._succ[a]

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self.edges

    def in_degree(self, b: int) -> int:
        return sum(1 for (_, v) in self.edges if v == b)

    def edges_with(self, label: str) -> set:
        return {e for e, lab in self.edges.items() if lab == label}

    def subgraph(self, keep) -> "EnvyGraph":
        keep = set(keep)
        return EnvyGraph(self.kind, [v for v in self.nodes if v in keep],
                         {e: lab for e, lab in self.edges.items() if e[0] in keep and e[1] in keep})

    def to_dot(self, X: Optional[Allocation] = None) -> str:
        """DOT text; node ids are ``"t:j"`` when an allocation is supplied."""
        name = (lambda a: X.instance.label(a)) if X is not None else str
        lines = [f"digraph {self.kind} {{"]
        for v in self.nodes:
            lines.append(f'  "{name(v)}";')
        for (u, v), lab in sorted(self.edges.items()):
            lines.append(f'  "{name(u)}" -> "{name(v)}" [label={lab}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _envy_edges(X: Allocation) -> Dict[Tuple[int, int], str]:
    edges = {}
    for a in range(X.n):
        own = X.value(a)
        for b in range(X.n):
            if a != b and own < X.value(a, X.bundles[b]):
                edges[(a, b)] = ENVY
    return edges


def _reduce(X: Allocation, edges: Dict[Tuple[int, int], str]) -> Dict[Tuple[int, int], str]:
    out = {}
    for (a, b), lab in edges.items():
        if (len(X.bundles[a]) > 1 and len(X.bundles[b]) == 1
                and X.value(a) >= X.value(a, X.bundles[b]) * TWO_THIRDS):
            continue
        out[(a, b)] = lab
    return out


def build_envy_graph(X: Allocation, kind: str = PLAIN) -> EnvyGraph:
    if kind not in KINDS:
        raise ValueError(f"unknown graph kind {kind!r}")
    nodes = list(range(X.n))
    edges = _envy_edges(X)
    if kind == PLAIN:
        return EnvyGraph(kind, nodes, edges)
    edges = _reduce(X, edges)
    if kind == REDUCED:
        return EnvyGraph(kind, nodes, edges)
    has_in = {b for (_, b) in edges}
    red_targets = [s for s in nodes if s not in has_in and len(X.bundles[s]) > 1]
    for a in nodes:
        if len(X.bundles[a]) != 1:
            continue
        own = X.value(a) * TWO_THIRDS
        for s in red_targets:
            if s != a and X.value(a, X.bundles[s]) >= own:
                edges[(a, s)] = RED
    return EnvyGraph(kind, nodes, edges)


def sources(G: EnvyGraph) -> List[int]:
    has_in = {b for (_, b) in G.edges}
    return [v for v in G.nodes if v not in has_in]


def find_cycle(G: EnvyGraph) -> Optional[List[int]]:
    """Some directed cycle ``[c0, c1, ...]`` (edges ``c_i -> c_{i+1}`` and back to ``c0``), or None.

    Iterative DFS from the lowest-indexed node; the first back edge wins.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in G.nodes}
    for root in G.nodes:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(G.successors(root)))]
        path = [root]
        color[root] = GREY
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GREY:
                return path[path.index(nxt):]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(G.successors(nxt))))
                path.append(nxt)
    return None


def find_path(G: EnvyGraph, start: int, goal: int) -> Optional[List[int]]:
    """Shortest directed path by BFS (ascending neighbour order), or None."""
    if start == goal:
        return [start]
    parent = {start: None}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in G.successors(v):
            if w in parent:
                continue
            parent[w] = v
            if w == goal:
                path = [w]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    return None


def reachable(G: EnvyGraph, start: int) -> List[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in G.successors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return sorted(seen)


def leading_path(X: Allocation, Ge: EnvyGraph, source: int, target: int) -> List[int]:
    """A path from ``source`` to ``target`` in ``Ge`` that visits leading agents only.

    Requires an acyclic ``Ge`` whose unique source is ``source`` and where every
    other leading agent holds a single good.  Raises ContractError otherwise.
    """
    leaders = leading_agents(X)
    if source not in leaders or target not in leaders:
        raise ContractError("leading_path endpoints must be leading agents")
    if sources(Ge) != [source]:
        raise ContractError(f"{source} is not the unique source of the graph")
    if any(len(X.bundles[a]) != 1 for a in leaders if a != source):
        raise ContractError("non-source leading agents must hold singleton bundles")
    if find_cycle(Ge) is not None:
        raise ContractError("graph is not acyclic")
    path = find_path(Ge.subgraph(leaders), source, target)
    if path is None:
        raise ContractError(f"no leading path from {source} to {target}")
    return path
