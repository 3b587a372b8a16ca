"""Compiled BFS kernels over CSR adjacency arrays.

All kernels take ``indptr``/``indices`` with neighbours sorted ascending per
row, so "first qualifying neighbour" is also "minimum-id neighbour".
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def bfs(indptr, indices, src, cutoff):
    """Hop distances from ``src``; -1 where unreachable or beyond ``cutoff`` (<0: none)."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        if cutoff >= 0 and du >= cutoff:
            continue
        for j in range(indptr[u], indptr[u + 1]):
            w = indices[j]
            if dist[w] < 0:
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True)
def _bfs_into(indptr, indices, src, dist, queue, limit):
    # dist must be all -1 on entry. Returns (visited count, reached max depth, pruned).
    dist[src] = 0
    queue[0] = src
    head = 0
    tail = 1
    pruned = False
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u]
        for j in range(indptr[u], indptr[u + 1]):
            w = indices[j]
            if dist[w] < 0:
                if limit >= 0 and du + 1 > limit:
                    pruned = True
                    break
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
        if pruned:
            break
    return tail, dist[queue[tail - 1]], pruned


@njit(cache=True)
def sft_sweep(ip, ix, gp, gl, gw, deg, sources, early_exit):
    """Eccentricity, WBND and BND of each node in ``sources``.

    ``ip/ix``: CSR of the infection subgraph (local ids).
    ``gp/gl/gw``: per infected node, its full-graph neighbour rows; ``gl`` is
    the neighbour's local id (-1 if healthy), ``gw`` is |log(1-q)|.
    With ``early_exit`` a BFS stops as soon as it exceeds the best
    eccentricity seen so far; such nodes get ``best + 1`` and score 0.
    """
    k = ip.shape[0] - 1
    m = sources.shape[0]
    ecc = np.empty(m, np.int64)
    wb = np.zeros(m, np.float64)
    bn = np.zeros(m, np.int64)
    dist = np.full(k, -1, np.int64)
    queue = np.empty(k, np.int64)
    best = -1
    for s in range(m):
        v = sources[s]
        limit = best if (early_exit and best >= 0) else -1
        tail, e, pruned = _bfs_into(ip, ix, v, dist, queue, limit)
        if pruned:
            ecc[s] = best + 1
        else:
            ecc[s] = e
            if best < 0 or e < best:
                best = e
            total = 0.0
            count = 0
            i = tail - 1
            while i >= 0 and dist[queue[i]] == e:
                u = queue[i]
                par = -1
                if e > 0:
                    for j in range(ip[u], ip[u + 1]):
                        if dist[ix[j]] == e - 1:
                            par = ix[j]
                            break
                for j in range(gp[u], gp[u + 1]):
                    if par >= 0 and gl[j] == par:
                        continue
                    total += gw[j]
                count += deg[u] - 1
                i -= 1
            wb[s] = total
            bn[s] = count
        for i in range(tail):
            dist[queue[i]] = -1
    return ecc, wb, bn


@njit(cache=True)
def bfs_tree_parents(ip, ix, root):
    """Min-id-parent BFS tree of a connected CSR graph: (dist, parent, order)."""
    k = ip.shape[0] - 1
    dist = np.full(k, -1, np.int64)
    queue = np.empty(k, np.int64)
    tail, _, _ = _bfs_into(ip, ix, root, dist, queue, -1)
    parent = np.full(k, -1, np.int64)
    for i in range(1, tail):
        u = queue[i]
        for j in range(ip[u], ip[u + 1]):
            if dist[ix[j]] == dist[u] - 1:
                parent[u] = ix[j]
                break
    return dist, parent, queue[:tail]


@njit(cache=True)
def rumor_sweep(ip, ix):
    """log rumor centrality of every node of a connected CSR graph.

    Uses the min-id-parent BFS tree rooted at each candidate in turn.
    """
    k = ip.shape[0] - 1
    out = np.empty(k, np.float64)
    dist = np.full(k, -1, np.int64)
    queue = np.empty(k, np.int64)
    size = np.empty(k, np.int64)
    log_fact = math.lgamma(k + 1.0)
    for v in range(k):
        tail, _, _ = _bfs_into(ip, ix, v, dist, queue, -1)
        for i in range(tail):
            size[queue[i]] = 1
        for i in range(tail - 1, 0, -1):
            u = queue[i]
            for j in range(ip[u], ip[u + 1]):
                if dist[ix[j]] == dist[u] - 1:
                    size[ix[j]] += size[u]
                    break
        acc = 0.0
        for i in range(tail):
            acc += math.log(size[queue[i]])
        out[v] = log_fact - acc
        for i in range(tail):
            dist[queue[i]] = -1
    return out
