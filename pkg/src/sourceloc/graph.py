"""Undirected weighted graphs, BFS, generators and edge-list I/O.

Nodes are dense integers ``0..n-1``. Each edge carries an infection
probability ``q`` shared by both directions. Graphs are immutable: the
backing arrays are read-only, and helpers that "change" weights return a new
graph.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import (
    DuplicateEdge,
    InvalidRange,
    NodeOutOfRange,
    ParseError,
    SelfLoop,
    WeightOutOfRange,
)

UNREACHABLE = -1


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Graph:
    """Simple undirected graph with per-edge probabilities in CSR form.

    ``edges`` holds the canonical edge list (``u < v``, sorted by ``(u, v)``)
    and ``q`` the matching probabilities. ``indptr``/``indices``/``weights``
    are the symmetric CSR adjacency with neighbours in ascending order;
    ``edge_ids`` maps each CSR slot back to its canonical edge.
    """

    __slots__ = ("n", "edges", "q", "indptr", "indices", "weights", "edge_ids", "labels")

    def __init__(self, n: int, edges: np.ndarray, q: np.ndarray, labels: Sequence[str] | None = None):
        # Trusts its inputs; use build_graph() for validated construction.
        self.n = int(n)
        self.edges = _frozen(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.q = _frozen(np.asarray(q, dtype=np.float64))
        m = len(self.edges)
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        self.indices = _frozen(dst[order])
        self.edge_ids = _frozen(eid[order])
        self.weights = _frozen(self.q[self.edge_ids])
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        self.indptr = _frozen(indptr)
        self.labels = tuple(labels) if labels is not None else None

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.weights[self.indptr[u]:self.indptr[u + 1]]

    @property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        return [
            [(int(w), float(q)) for w, q in zip(self.neighbors(u), self.neighbor_weights(u))]
            for u in range(self.n)
        ]

    def weight(self, u: int, v: int) -> float:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        if i == len(nbrs) or nbrs[i] != v:
            raise KeyError((u, v))
        return float(self.weights[self.indptr[u] + i])

    def edge_list(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(q)) for (u, v), q in zip(self.edges, self.q)]

    def with_weights(self, q: np.ndarray) -> "Graph":
        q = np.asarray(q, dtype=np.float64)
        if q.shape != self.q.shape:
            raise ValueError(f"expected {self.num_edges} weights, got {q.shape}")
        _check_weights(q)
        return Graph(self.n, self.edges, q, self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.q, other.q)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


def _check_weights(q: np.ndarray) -> None:
    bad = np.flatnonzero(~((q >= 0.0) & (q <= 1.0)))
    if bad.size:
        raise WeightOutOfRange(f"edge #{bad[0]} has q={q[bad[0]]!r}, outside [0, 1]")


def build_graph(n: int, edges: Iterable[Sequence[float]], labels: Sequence[str] | None = None) -> Graph:
    """Validate ``(u, v, q)`` triples (``q`` optional, default 1.0) and build a graph."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rows = [tuple(e) for e in edges]
    uv = np.array([(r[0], r[1]) for r in rows], dtype=np.int64).reshape(-1, 2)
    q = np.array([r[2] if len(r) > 2 else 1.0 for r in rows], dtype=np.float64)
    return _build_from_arrays(n, uv, q, labels)


def _build_from_arrays(n: int, uv: np.ndarray, q: np.ndarray, labels=None) -> Graph:
    if uv.size:
        bad = np.flatnonzero((uv < 0).any(axis=1) | (uv >= n).any(axis=1))
        if bad.size:
            u, v = uv[bad[0]]
            raise NodeOutOfRange(f"edge ({u}, {v}) references a node outside [0, {n})")
        loops = np.flatnonzero(uv[:, 0] == uv[:, 1])
        if loops.size:
            raise SelfLoop(f"self-loop on node {uv[loops[0], 0]}")
    _check_weights(q)
    lo = np.minimum(uv[:, 0], uv[:, 1])
    hi = np.maximum(uv[:, 0], uv[:, 1])
    order = np.lexsort((hi, lo))
    canon = np.stack([lo[order], hi[order]], axis=1)
    if len(canon) > 1:
        dup = np.flatnonzero((canon[1:] == canon[:-1]).all(axis=1))
        if dup.size:
            u, v = canon[dup[0]]
            raise DuplicateEdge(f"edge ({u}, {v}) appears more than once")
    return Graph(n, canon, q[order], labels)


def bfs_distances(g: Graph, src: int, cutoff: int | None = None) -> np.ndarray:
    """Hop distance from ``src`` to every node, ``UNREACHABLE`` where disconnected."""
    if not 0 <= src < g.n:
        raise NodeOutOfRange(f"source {src} outside [0, {g.n})")
    return _kernels.bfs(g.indptr, g.indices, int(src), -1 if cutoff is None else int(cutoff))


def is_connected(g: Graph) -> bool:
    if g.n == 0:
        return True
    return bool((bfs_distances(g, 0) >= 0).all())


def is_tree(g: Graph) -> bool:
    return g.num_edges == g.n - 1 and is_connected(g)


# -- generators ---------------------------------------------------------------

def gen_er(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p): every unordered pair wired independently with probability ``p``.

    Edges get the placeholder weight 1.0; see :func:`assign_weights`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    us, vs = [], []
    for u in range(n - 1):
        hits = np.flatnonzero(rng.random(n - u - 1) < p)
        if hits.size:
            us.append(np.full(hits.size, u, dtype=np.int64))
            vs.append(hits + u + 1)
    if us:
        uv = np.stack([np.concatenate(us), np.concatenate(vs)], axis=1)
    else:
        uv = np.empty((0, 2), dtype=np.int64)
    # rows already come out in canonical (u, v) order
    return Graph(n, uv, np.ones(len(uv)))


def gen_binomial_tree(m: int, beta: float, node_budget: int, rng: np.random.Generator) -> Graph:
    """Breadth-first grown tree whose nodes draw Bi(m, beta) children.

    Growth stops once ``node_budget`` nodes exist; children that would exceed
    the budget are dropped. Node 0 is the root and ids follow BFS order.
    """
    if m < 0 or not 0.0 <= beta <= 1.0 or node_budget < 1:
        raise ValueError("need m >= 0, beta in [0, 1], node_budget >= 1")
    edges = []
    count = 1
    frontier = deque([0])
    while frontier and count < node_budget:
        u = frontier.popleft()
        for _ in range(rng.binomial(m, beta)):
            if count >= node_budget:
                break
            edges.append((u, count))
            frontier.append(count)
            count += 1
    uv = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return Graph(count, uv, np.ones(len(uv)))


def assign_weights(g: Graph, lo: float, hi: float, rng: np.random.Generator) -> Graph:
    """Fresh copy of ``g`` with every q drawn iid uniform on ``(lo, hi)``."""
    if not 0.0 <= lo <= hi <= 1.0:
        raise InvalidRange(f"need 0 <= lo <= hi <= 1, got lo={lo}, hi={hi}")
    return Graph(g.n, g.edges, rng.uniform(lo, hi, size=g.num_edges), g.labels)


# -- edge-list files ----------------------------------------------------------

def write_edge_list(g: Graph, path) -> None:
    """Write ``u<TAB>v<TAB>q`` lines in canonical order.

    A leading ``# nodes: n`` comment keeps isolated nodes across a round trip.
    ``repr`` of the float keeps every bit of q.
    """
    lines = [f"# nodes: {g.n}\n"]
    lines.extend(f"{u}\t{v}\t{q!r}\n" for u, v, q in g.edge_list())
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_edge_list(path) -> Graph:
    """Parse an edge-list file.

    Integer tokens are used as node ids directly. If any token is not a
    nonnegative integer, tokens are instead mapped to dense ids in order of
    first appearance and kept in ``Graph.labels``.
    """
    text = Path(path).read_text(encoding="utf-8")
    declared_n = None
    rows: list[tuple[str, str, float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("nodes:"):
                try:
                    declared_n = int(body.split(":", 1)[1])
                except ValueError:
                    raise ParseError(f"bad node count {body!r}", lineno) from None
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u<TAB>v[<TAB>q]', got {raw!r}", lineno)
        q = 1.0
        if len(parts) == 3:
            try:
                q = float(parts[2])
            except ValueError:
                raise ParseError(f"bad probability {parts[2]!r}", lineno) from None
        rows.append((parts[0].strip(), parts[1].strip(), q, lineno))

    numeric = all(a.isdigit() and b.isdigit() for a, b, _, _ in rows)
    labels = None
    if numeric:
        ids = [(int(a), int(b)) for a, b, _, _ in rows]
        n = max((max(p) for p in ids), default=-1) + 1
        if declared_n is not None:
            if declared_n < n:
                raise ParseError(f"header declares {declared_n} nodes but ids reach {n - 1}")
            n = declared_n
    else:
        index: dict[str, int] = {}
        ids = []
        for a, b, _, _ in rows:
            ids.append((index.setdefault(a, len(index)), index.setdefault(b, len(index))))
        n = len(index)
        labels = list(index)

    # Validate row by row so errors carry the offending line number.
    seen: set[tuple[int, int]] = set()
    for (u, v), (_, _, q, lineno) in zip(ids, rows):
        try:
            if u == v:
                raise SelfLoop(f"self-loop on node {u}")
            if not 0.0 <= q <= 1.0:
                raise WeightOutOfRange(f"q={q!r} outside [0, 1]")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdge(f"edge {key} appears more than once")
            seen.add(key)
        except (SelfLoop, WeightOutOfRange, DuplicateEdge) as exc:
            raise ParseError(str(exc), lineno, reason=exc) from exc
    uv = np.array(ids, dtype=np.int64).reshape(-1, 2)
    q = np.array([r[2] for r in rows], dtype=np.float64)
    return _build_from_arrays(n, uv, q, labels)
