from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np
import pytest

from sourceloc import build_graph

# -- tiny graphs -----------------------------------------------------------------


def path_graph(n, q=0.5):
    return build_graph(n, [(i, i + 1, q) for i in range(n - 1)])


def star_graph(k, q=0.5):
    return build_graph(k + 1, [(0, i, q) for i in range(1, k + 1)])


def cycle_graph(n, q=0.5):
    return build_graph(n, [(i, (i + 1) % n, q) for i in range(n)])


def complete_graph(n, q=0.5):
    return build_graph(n, [(i, j, q) for i, j in itertools.combinations(range(n), 2)])


def two_center_graph(q=0.5):
    """Four infected nodes 1-4 where 1 and 2 are the Jordan centers.

    1 and 2 touch every other infected node, 3 and 4 are not adjacent.
    Healthy neighbours: 2 has four (0, 5, 6, 7), 3 has three, 4 has two,
    1 has none. That gives WBND(1) = 13 and WBND(2) = 9 edge units.
    """
    edges = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4)]
    edges += [(2, 0), (2, 5), (2, 6), (2, 7), (3, 8), (3, 9), (3, 10), (4, 11), (4, 12)]
    return build_graph(13, [(u, v, q) for u, v in edges])


def random_connected_graph(rng, n, extra_p):
    """Random spanning tree plus independent extra edges."""
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in edges and rng.random() < extra_p:
            edges.add((i, j))
    return build_graph(n, [(u, v, float(rng.uniform(0.05, 0.95))) for u, v in sorted(edges)])


def random_tree(rng, n, lo=0.2, hi=0.5):
    edges = [(int(rng.integers(i)), i, float(rng.uniform(lo, hi))) for i in range(1, n)]
    perm = rng.permutation(n)
    return build_graph(n, [(int(perm[u]), int(perm[v]), q) for u, v, q in edges])


# -- independent oracles ---------------------------------------------------------

INF = math.inf


def floyd_warshall(n, pairs):
    d = [[INF] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0
    for u, v in pairs:
        d[u][v] = d[v][u] = 1
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik == INF:
                continue
            di = d[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return d


def induced_pairs(g, nodes):
    s = set(nodes)
    return [(int(u), int(v)) for u, v in g.edges if u in s and v in s]


def brute_eccentricities(g, infected):
    """Eccentricity of each infected node via all-pairs Floyd-Warshall on g_i."""
    nodes = sorted(int(u) for u in infected)
    idx = {u: i for i, u in enumerate(nodes)}
    d = floyd_warshall(len(nodes), [(idx[u], idx[v]) for u, v in induced_pairs(g, nodes)])
    return {u: max(d[idx[u]]) for u in nodes}


def min_id_bfs_tree(g, nodes, root):
    """Plain-Python BFS tree on the subgraph induced by ``nodes`` with min-id parents."""
    s = set(nodes)
    adj = {u: sorted(int(w) for w in g.neighbors(u) if int(w) in s) for u in s}
    dist = {root: 0}
    q = deque([root])
    while q:
        u = q.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    parent = {}
    for u in s:
        if u != root:
            parent[u] = min(w for w in adj[u] if dist[w] == dist[u] - 1)
    return dist, parent


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    def record(criterion: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
