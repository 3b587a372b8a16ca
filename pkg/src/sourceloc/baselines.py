"""Reference localizers: ECCE, rumor centrality (RUM) and NETSLEUTH."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .diffusion import Snapshot
from .errors import PowerIterationDiverged
from .graph import Graph
from .localization import InfectionSubgraph, LocalizationResult, infection_subgraph, rank_nodes


def ecce_estimate(g: Graph, snapshot: Snapshot, rng: np.random.Generator) -> LocalizationResult:
    """Minimum infection eccentricity; ties broken by a seeded shuffle."""
    gi = infection_subgraph(g, snapshot.infected)
    ecc, _, _ = gi.sweep()
    shuffle = rng.permutation(gi.size)
    ranking = rank_nodes(gi.nodes, ecc, shuffle)
    return LocalizationResult("ecce", gi.nodes, ecc, -ecc.astype(np.float64), ranking)


def rumor_centrality(gi: InfectionSubgraph, v: int) -> float:
    """log R(v): log|I|! minus the log subtree sizes of the BFS tree rooted at ``v``.

    Exact on trees; on other graphs the min-id-parent BFS tree of ``v`` stands
    in for the subgraph.
    """
    _, parent, order = _kernels.bfs_tree_parents(gi.indptr, gi.indices, gi.local(v))
    size = np.ones(gi.size, dtype=np.int64)
    for u in order[:0:-1]:
        size[parent[u]] += size[u]
    return math.lgamma(gi.size + 1.0) - float(np.log(size).sum())


def rum_estimate(g: Graph, snapshot: Snapshot) -> LocalizationResult:
    gi = infection_subgraph(g, snapshot.infected)
    logr = _kernels.rumor_sweep(gi.indptr, gi.indices)
    # equal counts can differ in the last bits depending on summation order
    ranking = rank_nodes(gi.nodes, -np.round(logr, 9))
    return LocalizationResult("rum", gi.nodes, None, logr, ranking)


def laplacian(gi: InfectionSubgraph) -> sp.csr_matrix:
    """D - A on the infection subgraph (degrees counted inside it)."""
    k = gi.size
    adj = sp.csr_matrix((np.ones(len(gi.indices)), gi.indices, gi.indptr), shape=(k, k))
    deg = np.diff(gi.indptr).astype(np.float64)
    return (sp.diags(deg) - adj).tocsr()


def power_iteration(mat, tol: float = 1e-10, max_iter: int = 10_000, shift: float | None = None):
    """Dominant eigenpair of a symmetric PSD matrix by iterating on ``mat + shift*I``.

    By default the shift is -0.45 times the first Rayleigh quotient. That
    quotient never exceeds the top eigenvalue, so the top eigenvalue stays
    dominant in magnitude while the convergence ratio improves. Stops when
    ``||Ax - lam x||_inf <= tol * max(1, lam)``. The start vector 1/(i+1) is
    deterministic and not orthogonal to the top eigenvector of paths or
    cliques.
    """
    k = mat.shape[0]
    x = 1.0 / np.arange(1, k + 1)
    x /= np.linalg.norm(x)
    resid = np.inf
    for it in range(1, max_iter + 1):
        y = mat @ x
        lam = float(x @ y)
        resid = np.abs(y - lam * x).max()
        if resid <= tol * max(1.0, abs(lam)):
            return lam, x, it
        if shift is None:
            shift = -0.45 * lam
        z = y + shift * x
        x = z / np.linalg.norm(z)
    raise PowerIterationDiverged(f"no convergence to {tol:g} within {max_iter} iterations (residual {resid:.3g})")


def _sign_fix(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    # first entry within rounding of the largest magnitude, so exact ties go to the lowest id
    pivot = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0])
    return -x if x[pivot] < 0 else x


def netsleuth_estimate(g: Graph, snapshot: Snapshot, tol: float = 1e-10, max_iter: int = 10_000) -> LocalizationResult:
    """Largest entry of the top eigenvector of the infected-subgraph Laplacian."""
    gi = infection_subgraph(g, snapshot.infected)
    if gi.size == 1:
        score = np.zeros(1)
    else:
        _, x, _ = power_iteration(laplacian(gi), tol=tol, max_iter=max_iter)
        score = _sign_fix(x)
    ranking = rank_nodes(gi.nodes, -score)
    return LocalizationResult("netsleuth", gi.nodes, None, score, ranking)
