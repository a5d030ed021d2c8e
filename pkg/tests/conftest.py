"""Independent brute-force oracles shared by the tests."""

from __future__ import annotations

from collections import deque

import pytest


def bfs_within(adj, src, depth=2):
    """Nodes at graph distance 1..depth from src, by plain BFS."""
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        if dist[u] == depth:
            continue
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return {v for v, d in dist.items() if 0 < d <= depth}


def exhaustive_coloring(n, conflict):
    """Smallest k admitting a proper k-coloring, by plain depth-first search.

    Nodes are colored in id order, trying every color at each step; a
    branch is abandoned only when it already contains a conflicting pair.
    No ordering heuristics, so it shares nothing with the DSATUR code.
    """
    def extend(colors, k):
        i = len(colors)
        if i == n:
            return True
        # colors beyond max-used + 1 are symmetric to it
        for c in range(min(k, max(colors, default=-1) + 2)):
            if all(colors[j] != c for j in conflict[i] if j < i):
                colors.append(c)
                if extend(colors, k):
                    return True
                colors.pop()
        return False

    for k in range(1, n + 1):
        if extend([], k):
            return k
    return n


def adjacency_of(topo):
    return [set(s) for s in topo.adjacency]


@pytest.fixture
def oracle_two_hop():
    def f(topo):
        adj = adjacency_of(topo)
        return [bfs_within(adj, i) for i in range(topo.node_count)]
    return f


_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
