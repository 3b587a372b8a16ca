"""Short-Fat Tree source estimation.

Candidates are the Jordan infection centers of the infection subgraph
(minimum eccentricity); among them the estimator maximises the weighted
boundary node degree (WBND) or its unweighted form (BND). Every infected
node is ranked by (eccentricity asc, tie-break score desc, id asc).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .diffusion import Snapshot, _gather_rows
from .errors import DisconnectedInfection, InvalidSnapshot, NodeOutOfRange
from .graph import Graph

# |log(1 - q)| is infinite at q = 1; clamp so such edges stay finite but dominant.
Q_CLAMP = 1.0 - 1e-12

MODES = ("wbnd", "bnd")


@dataclass(frozen=True, eq=False)
class InfectionSubgraph:
    """Subgraph induced by the infected set, in local ids ``0..k-1``.

    ``nodes[i]`` is the graph id of local node ``i`` (ascending, so local
    order agrees with graph-id order). Besides the induced CSR
    (``indptr``/``indices``) it keeps, for each infected node, its complete
    neighbour row in the parent graph: ``g_indptr``, ``g_local`` (local id of
    the neighbour or -1 if healthy), ``g_cost`` (|log(1-q)|) and ``g_degree``.
    """

    nodes: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    g_indptr: np.ndarray
    g_local: np.ndarray
    g_cost: np.ndarray
    g_degree: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def local(self, u: int) -> int:
        i = int(np.searchsorted(self.nodes, u))
        if i == len(self.nodes) or self.nodes[i] != u:
            raise NodeOutOfRange(f"node {u} is not infected")
        return i

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for a in range(self.size):
            for b in self.indices[self.indptr[a]:self.indptr[a + 1]]:
                if a < b:
                    out.append((int(self.nodes[a]), int(self.nodes[b])))
        return out

    def sweep(self, sources: np.ndarray | None = None, early_exit: bool = False):
        if sources is None:
            sources = np.arange(self.size, dtype=np.int64)
        return _kernels.sft_sweep(
            self.indptr, self.indices, self.g_indptr, self.g_local, self.g_cost,
            self.g_degree, np.asarray(sources, dtype=np.int64), early_exit,
        )


def infection_subgraph(g: Graph, infected) -> InfectionSubgraph:
    nodes = np.unique(np.asarray(infected, dtype=np.int64))
    if nodes.size == 0:
        raise InvalidSnapshot("infected set is empty")
    if nodes[0] < 0 or nodes[-1] >= g.n:
        raise NodeOutOfRange("infected set references nodes outside the graph")
    k = nodes.size
    loc = np.full(g.n, -1, dtype=np.int64)
    loc[nodes] = np.arange(k)
    slots = _gather_rows(g.indptr, nodes)
    deg = g.indptr[nodes + 1] - g.indptr[nodes]
    g_indptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(deg, out=g_indptr[1:])
    g_local = loc[g.indices[slots]]
    g_cost = -np.log1p(-np.minimum(g.weights[slots], Q_CLAMP))
    keep = g_local >= 0
    rows = np.repeat(np.arange(k), deg)
    indptr = np.zeros(k + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows[keep], minlength=k), out=indptr[1:])
    indices = g_local[keep]
    reached = _kernels.bfs(indptr, indices, 0, -1) >= 0
    if not reached.all():
        raise DisconnectedInfection(
            f"infected set splits into several components "
            f"(node {nodes[np.argmin(reached)]} unreachable from node {nodes[0]})"
        )
    return InfectionSubgraph(nodes, indptr, indices, g_indptr, g_local, g_cost, deg.astype(np.int64))


@dataclass(frozen=True, eq=False)
class EccentricityTable:
    nodes: np.ndarray
    values: np.ndarray

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.nodes.tolist(), self.values.tolist()))

    @property
    def minimum(self) -> int:
        return int(self.values.min())


def eccentricities(gi: InfectionSubgraph) -> EccentricityTable:
    """Exact infection eccentricity of every infected node (one BFS each)."""
    ecc, _, _ = gi.sweep()
    return EccentricityTable(gi.nodes, ecc)


def jordan_centers(ecc: EccentricityTable) -> set[int]:
    return set(ecc.nodes[ecc.values == ecc.values.min()].tolist())


@dataclass(frozen=True)
class BoundarySet:
    root: int
    eccentricity: int
    nodes: tuple[int, ...]
    parents: dict[int, int | None]


def boundary_nodes(gi: InfectionSubgraph, v: int) -> BoundarySet:
    """Infected nodes farthest from ``v``, each with its min-id BFS parent."""
    dist, parent, _ = _kernels.bfs_tree_parents(gi.indptr, gi.indices, gi.local(v))
    e = int(dist.max())
    members = np.flatnonzero(dist == e)
    parents = {
        int(gi.nodes[u]): (int(gi.nodes[parent[u]]) if parent[u] >= 0 else None)
        for u in members
    }
    return BoundarySet(int(v), e, tuple(gi.nodes[members].tolist()), parents)


def wbnd(g: Graph, gi: InfectionSubgraph, v: int) -> float:
    """Sum of |log(1-q)| over every graph edge of a boundary node except its parent edge."""
    _, wb, _ = gi.sweep(np.array([gi.local(v)]))
    return float(wb[0])


def bnd(g: Graph, gi: InfectionSubgraph, v: int) -> int:
    """Total graph degree of the boundary nodes minus their count."""
    _, _, bn = gi.sweep(np.array([gi.local(v)]))
    return int(bn[0])


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    """Ranking of the infected nodes by an estimator.

    ``nodes`` are the infected ids ascending; ``eccentricity`` and ``score``
    align with them (``score`` is the algorithm's own tie-break or ranking
    score). ``ranking`` lists every infected node, best first.
    """

    algorithm: str
    nodes: np.ndarray
    eccentricity: np.ndarray | None
    score: np.ndarray
    ranking: np.ndarray

    @property
    def estimator(self) -> int:
        return int(self.ranking[0])

    def rank_of(self, u: int) -> int:
        """1-based position of ``u`` in the ranking."""
        hits = np.flatnonzero(self.ranking == u)
        if not hits.size:
            raise NodeOutOfRange(f"node {u} is not in the ranking")
        return int(hits[0]) + 1

    @property
    def scores(self) -> dict[int, tuple]:
        ecc = self.eccentricity if self.eccentricity is not None else [None] * len(self.nodes)
        return {
            int(u): (None if e is None else int(e), float(s), self.algorithm)
            for u, e, s in zip(self.nodes, ecc, self.score)
        }


def rank_nodes(nodes: np.ndarray, *keys: np.ndarray) -> np.ndarray:
    """Sort ``nodes`` by the given keys (primary first), ascending, ids last."""
    order = np.lexsort((nodes,) + tuple(reversed(keys)))
    return nodes[order]


def sft_estimate(g: Graph, snapshot: Snapshot, mode: str = "wbnd", full_ranking: bool = True) -> LocalizationResult:
    """Short-Fat Tree estimator (``mode='wbnd'``: wSFT, ``'bnd'``: SFT).

    With ``full_ranking=False`` the eccentricity sweep skips the rest of a
    BFS once it exceeds the best eccentricity found so far. The estimator is
    unchanged, but non-center nodes only get the lower bound e*+1 and a
    zero score, so their ranking order is by id.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    gi = infection_subgraph(g, snapshot.infected)
    ecc, wb, bn = gi.sweep(early_exit=not full_ranking)
    if not full_ranking:
        emin = ecc.min()
        ecc = np.where(ecc == emin, ecc, emin + 1)
        mask = ecc == emin
        wb = np.where(mask, wb, 0.0)
        bn = np.where(mask, bn, 0)
    score = wb if mode == "wbnd" else bn.astype(np.float64)
    ranking = rank_nodes(gi.nodes, ecc, -score)
    return LocalizationResult(f"sft-{mode}", gi.nodes, ecc, score, ranking)
