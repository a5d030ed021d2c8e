"""Network topologies, two-hop interference sets and the minimum-slot oracle.

Node ids are always dense integers ``0..node_count-1`` and links are
undirected. The interference map of a node is every other node within two
hops: those are the nodes it may not share a firing phase with.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

import networkx as nx

EXACT_NODE_LIMIT = 25


class TopologyError(ValueError):
    """Invalid topology size, edge list or spec string."""


class TopologyTooLarge(TopologyError):
    pass


@dataclass(frozen=True)
class Topology:
    node_count: int
    edges: frozenset[tuple[int, int]]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if self.node_count < 1:
            raise TopologyError("node_count must be positive")
        norm = set()
        for a, b in self.edges:
            if a == b:
                raise TopologyError(f"self-loop on node {a}")
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise TopologyError(f"edge ({a}, {b}) outside 0..{self.node_count - 1}")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.node_count)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return tuple(frozenset(s) for s in adj)

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(sorted(self.edges))
        return g


def _build(n: int, edges: Iterable[tuple[int, int]], name: str) -> Topology:
    return Topology(n, frozenset(edges), name)


def make_star(n: int) -> Topology:
    """Star with node 0 at the center."""
    if n < 2:
        raise TopologyError("star needs at least 2 nodes")
    return _build(n, ((0, k) for k in range(1, n)), f"star:{n}")


def make_chain(n: int) -> Topology:
    if n < 2:
        raise TopologyError("chain needs at least 2 nodes")
    return _build(n, ((k, k + 1) for k in range(n - 1)), f"chain:{n}")


def make_cycle(n: int) -> Topology:
    if n < 3:
        raise TopologyError("cycle needs at least 3 nodes")
    edges = [(k, k + 1) for k in range(n - 1)] + [(0, n - 1)]
    return _build(n, edges, f"cycle:{n}")


def make_dumbbell(n: int) -> Topology:
    """Two relays (0 and 1) joined by one link, each carrying (n-2)/2 leaves.

    Leaves ``2 .. 2+h-1`` hang off relay 0 and the rest off relay 1.
    """
    if n < 6 or n % 2:
        raise TopologyError("dumbbell needs an even node count >= 6")
    half = (n - 2) // 2
    edges = [(0, 1)]
    edges += [(0, 2 + k) for k in range(half)]
    edges += [(1, 2 + half + k) for k in range(half)]
    return _build(n, edges, f"dumbbell:{n}")


def make_clique(n: int) -> Topology:
    """Fully connected single-hop network."""
    if n < 1:
        raise TopologyError("clique needs at least 1 node")
    return _build(n, ((a, b) for a in range(n) for b in range(a + 1, n)), f"clique:{n}")


def load_topology(text: str, name: str = "custom") -> Topology:
    """Parse a whitespace-separated edge list; ``#`` starts a comment line."""
    edges = set()
    seen: set[int] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected two node ids, got {raw!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(f"line {lineno}: node ids must be integers") from None
        if a < 0 or b < 0:
            raise TopologyError(f"line {lineno}: negative node id")
        if a == b:
            raise TopologyError(f"line {lineno}: self-loop on node {a}")
        edges.add((min(a, b), max(a, b)))
        seen.update((a, b))
    if not seen:
        raise TopologyError("edge list is empty")
    n = max(seen) + 1
    if len(seen) != n:
        missing = sorted(set(range(n)) - seen)
        raise TopologyError(f"node ids are not dense; missing {missing}")
    return Topology(n, frozenset(edges), name)


def shipped_mesh() -> Topology:
    text = resources.files("desyncsim.data").joinpath("mesh10.txt").read_text("utf-8")
    return load_topology(text, name="mesh:10")


_GENERATORS = {
    "star": make_star,
    "chain": make_chain,
    "cycle": make_cycle,
    "dumbbell": make_dumbbell,
    "clique": make_clique,
}


def from_spec(spec: str) -> Topology:
    """Build a topology from ``kind:n``, ``mesh10`` or ``file:<path>``."""
    spec = spec.strip()
    if spec in ("mesh10", "mesh:10"):
        return shipped_mesh()
    kind, _, arg = spec.partition(":")
    if kind == "file":
        path = Path(arg)
        try:
            return load_topology(path.read_text("utf-8"), name=spec)
        except OSError as exc:
            raise TopologyError(f"cannot read edge list {path}: {exc}") from exc
    gen = _GENERATORS.get(kind)
    if gen is None or not arg.isdigit():
        raise TopologyError(f"unknown topology spec {spec!r}")
    return gen(int(arg))


def two_hop(t: Topology) -> tuple[frozenset[int], ...]:
    """For each node, the ids within graph distance 2 (self excluded)."""
    adj = t.adjacency
    out = []
    for i in range(t.node_count):
        reach = set(adj[i])
        for j in adj[i]:
            reach |= adj[j]
        reach.discard(i)
        out.append(frozenset(reach))
    return tuple(out)


# -- minimum slots (chromatic number of the two-hop graph) -------------------


class SlotBound(NamedTuple):
    slots: int
    exact: bool


def _max_clique(adj: list[set[int]]) -> int:
    g = nx.Graph()
    g.add_nodes_from(range(len(adj)))
    g.add_edges_from((a, b) for a in range(len(adj)) for b in adj[a] if a < b)
    return max(len(c) for c in nx.find_cliques(g))


def _dsatur_greedy(adj: list[set[int]]) -> int:
    n = len(adj)
    colors = [-1] * n
    for _ in range(n):
        best = max(
            (v for v in range(n) if colors[v] < 0),
            key=lambda v: (len({colors[u] for u in adj[v] if colors[u] >= 0}), len(adj[v]), -v),
        )
        used = {colors[u] for u in adj[best]}
        c = 0
        while c in used:
            c += 1
        colors[best] = c
    return max(colors) + 1


def _branch_and_bound(adj: list[set[int]], lower: int, upper: int) -> int:
    n = len(adj)
    colors = [-1] * n
    best = upper

    def pick() -> int:
        cand = -1
        key = (-1, -1)
        for v in range(n):
            if colors[v] >= 0:
                continue
            sat = len({colors[u] for u in adj[v] if colors[u] >= 0})
            k = (sat, len(adj[v]))
            if k > key:
                key, cand = k, v
        return cand

    def search(colored: int, used: int) -> bool:
        nonlocal best
        if used >= best:
            return False
        if colored == n:
            best = used
            return best == lower
        v = pick()
        taken = {colors[u] for u in adj[v]}
        for c in range(used):
            if c not in taken:
                colors[v] = c
                if search(colored + 1, used):
                    return True
        if used + 1 < best:
            colors[v] = used
            if search(colored + 1, used + 1):
                return True
        colors[v] = -1
        return False

    if lower < upper:
        search(0, 0)
    return best


def slot_bound(t: Topology, exact_limit: int = EXACT_NODE_LIMIT) -> SlotBound:
    """Minimum slot count, falling back to a greedy bound on large graphs.

    The result is exact whenever the graph is small enough to search, or when
    the clique lower bound already meets the greedy upper bound.
    """
    adj = [set(s) for s in two_hop(t)]
    lower = _max_clique(adj)
    upper = _dsatur_greedy(adj)
    if lower == upper:
        return SlotBound(upper, True)
    if t.node_count > exact_limit:
        return SlotBound(upper, False)
    return SlotBound(_branch_and_bound(adj, lower, upper), True)


def min_slots(t: Topology, exact_limit: int = EXACT_NODE_LIMIT) -> int:
    """Exact chromatic number of the two-hop interference graph."""
    if t.node_count > exact_limit:
        raise TopologyTooLarge(
            f"exact slot search is capped at {exact_limit} nodes (got {t.node_count})"
        )
    return slot_bound(t, exact_limit).slots
