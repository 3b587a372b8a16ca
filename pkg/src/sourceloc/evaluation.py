"""Scoring metrics, an exact MAP oracle for small trees, and theory helpers."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .diffusion import Snapshot
from .errors import EmptyRecords, InvalidRegime, NotATree, TooLarge
from .graph import UNREACHABLE, Graph, bfs_distances, is_tree
from .localization import InfectionSubgraph

RECORD_COLUMNS = ("algorithm", "trial", "source", "estimator", "rank", "distance", "infected", "obs_time", "seconds")

MAX_ORACLE_EDGES = 12


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one algorithm on one snapshot.

    ``size`` is the target infection size of the sweep the trial belongs to;
    it is used for grouping and is not written to the records CSV.
    ``seconds`` is ``None`` when timing was not recorded.
    """

    algorithm: str
    trial: int
    source: int
    estimator: int
    rank: int
    distance: int
    infected: int
    obs_time: int
    seconds: float | None = None
    size: float | None = None

    def __post_init__(self):
        if not 1 <= self.rank <= self.infected:
            raise ValueError(f"rank {self.rank} outside [1, {self.infected}]")
        if self.distance < 0 or (self.distance == 0) != (self.estimator == self.source):
            raise ValueError("distance must be >= 0 and zero exactly when the estimator is the source")


def _require(records: Sequence[TrialRecord]) -> None:
    if not records:
        raise EmptyRecords("no records to score")


def detection_rate(records: Sequence[TrialRecord]) -> float:
    _require(records)
    return sum(r.distance == 0 for r in records) / len(records)


def gamma_accuracy(records: Sequence[TrialRecord], gamma: float) -> float:
    """Share of trials whose source ranks within the top ``gamma`` percent."""
    _require(records)
    if not 0 < gamma <= 100:
        raise ValueError("gamma must lie in (0, 100]")
    hits = 0
    for r in records:
        # round first so 100 * k / 100 does not land just above an integer
        cutoff = math.ceil(round(gamma / 100.0 * r.infected, 9))
        hits += r.rank <= cutoff
    return hits / len(records)


def hop_distance(g: Graph, a: int, b: int) -> int:
    if a == b:
        return 0
    d = int(bfs_distances(g, a)[b])
    return d if d >= 0 else UNREACHABLE


# -- MAP oracle ----------------------------------------------------------------

class TimePrior:
    """Nonincreasing distribution of the observation time over t = 0, 1, ...

    Either geometric, ``Pr(t) = (1 - ratio) * ratio**t``, or an explicit
    finite pmf.
    """

    def __init__(self, ratio: float | None = 0.5, pmf: Sequence[float] | None = None):
        if pmf is not None:
            p = np.asarray(pmf, dtype=np.float64)
            if p.ndim != 1 or p.size == 0 or (p < 0).any() or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
                raise ValueError("pmf must be a nonnegative vector summing to 1")
            if (np.diff(p) > 1e-15).any():
                raise ValueError("pmf must be nonincreasing")
            self.ratio = None
            self._pmf = p
        else:
            if ratio is None or not 0.0 <= ratio < 1.0:
                raise ValueError("ratio must lie in [0, 1)")
            self.ratio = float(ratio)
            self._pmf = None

    @classmethod
    def geometric(cls, ratio: float = 0.5) -> "TimePrior":
        return cls(ratio=ratio)

    def pmf(self, t: int) -> float:
        if self._pmf is not None:
            return float(self._pmf[t]) if t < self._pmf.size else 0.0
        return (1.0 - self.ratio) * self.ratio ** t

    def tail(self, t: int) -> float:
        """Pr(T >= t)."""
        if self._pmf is not None:
            return float(self._pmf[t:].sum())
        return self.ratio ** t


def map_bruteforce(g: Graph, snapshot: Snapshot, prior: TimePrior | None = None) -> tuple[set[int], np.ndarray]:
    """Exact source posterior on a small tree by enumerating live-edge graphs.

    For every subset of live edges (probability ``prod q * prod (1 - q)``)
    and every candidate source, the infected set is reproduced at time t iff
    every infected node is within t live hops and every healthy node is not.
    Feasibility is constant once t reaches n - 1 (no live path is longer),
    so the remaining prior mass is folded into that last term. Uniform
    source prior. Returns (argmax set, posterior over all nodes).
    """
    prior = prior or TimePrior.geometric(0.5)
    if g.num_edges > MAX_ORACLE_EDGES:
        raise TooLarge(f"{g.num_edges} edges; the oracle enumerates at most {MAX_ORACLE_EDGES}")
    if not is_tree(g):
        raise NotATree("map_bruteforce needs a tree")
    n, m = g.n, g.num_edges
    masks = np.arange(1 << m, dtype=np.int64)
    live = ((masks[:, None] >> np.arange(m)) & 1).astype(bool)
    prob = np.prod(np.where(live, g.q, 1.0 - g.q), axis=1)
    infected = np.zeros(n, dtype=bool)
    infected[snapshot.infected] = True
    big = n + 1
    horizon = max(n - 1, 0)
    post = np.zeros(n)
    for v in snapshot.infected:
        # live-graph BFS from v, vectorised over all edge subsets
        dist = np.full((masks.size, n), big, dtype=np.int64)
        dist[:, v] = 0
        for step in range(1, n):
            for e, (a, b) in enumerate(g.edges):
                via_a = live[:, e] & (dist[:, a] == step - 1) & (dist[:, b] == big)
                via_b = live[:, e] & (dist[:, b] == step - 1) & (dist[:, a] == big)
                dist[via_a, b] = step
                dist[via_b, a] = step
        reach_i = dist[:, infected].max(axis=1)
        reach_h = dist[:, ~infected].min(axis=1) if (~infected).any() else np.full(masks.size, big)
        total = 0.0
        for t in range(horizon + 1):
            ok = (reach_i <= t) & (reach_h > t)
            like = prob[ok].sum()
            weight = prior.tail(t) if t == horizon else prior.pmf(t)
            total += like * weight
        post[v] = total
    z = post.sum()
    if z > 0:
        post = post / z
    best = post.max()
    argmax = set(np.flatnonzero(post >= best * (1 - 1e-9)).tolist()) if best > 0 else set()
    return argmax, post


# -- theory helpers --------------------------------------------------------------

def compute_t_u(n: float, mu: float, q: float, base: float = math.e) -> int:
    """Observation time beyond which an ER graph is fully infected w.h.p.

    ``ceil(log n / (log mu + log q)) + 2``; the base cancels in the ratio.
    """
    if mu * q <= 1:
        raise InvalidRegime(f"need mu*q > 1, got {mu * q:g}")
    ratio = math.log(n, base) / (math.log(mu, base) + math.log(q, base))
    nearest = round(ratio)
    if math.isclose(ratio, nearest, rel_tol=0, abs_tol=1e-9):
        ratio = nearest
    return math.ceil(ratio) + 2


def leaf_fraction(gi: InfectionSubgraph, source: int) -> float:
    """Fraction of childless nodes in the min-id-parent BFS tree from ``source``."""
    _, parent, order = _kernels.bfs_tree_parents(gi.indptr, gi.indices, gi.local(source))
    has_child = np.zeros(gi.size, dtype=bool)
    has_child[parent[order[1:]]] = True
    return float((~has_child[order]).sum()) / gi.size


# -- aggregation ---------------------------------------------------------------

Z95 = 1.959963984540054


def _rate_ci(p: float, n: int) -> tuple[float, float]:
    half = Z95 * math.sqrt(p * (1 - p) / n)
    return max(0.0, p - half), min(1.0, p + half)


def _mean_ci(values: Sequence[float]) -> tuple[float, float, float]:
    a = np.asarray(values, dtype=np.float64)
    mean = float(a.mean())
    if a.size < 2:
        return mean, mean, mean
    half = Z95 * float(a.std(ddof=1)) / math.sqrt(a.size)
    return mean, mean - half, mean + half


def summarize(
    records: Sequence[TrialRecord],
    keys: Sequence[str] = ("size", "algorithm"),
    gammas: Iterable[float] = (),
) -> list[dict]:
    """One row per group: detection rate, distance and gamma-accuracy with 95% CIs.

    Rates use the normal approximation; a group of one record has a
    zero-width interval.
    """
    _require(records)
    gammas = list(gammas)
    groups: dict[tuple, list[TrialRecord]] = defaultdict(list)
    for r in records:
        groups[tuple(getattr(r, k) for k in keys)].append(r)
    rows = []
    for key in sorted(groups, key=lambda t: tuple((x is None, x) for x in t)):
        rs = groups[key]
        n = len(rs)
        row = dict(zip(keys, key))
        row["n"] = n
        rate = detection_rate(rs)
        row["detection_rate"] = rate
        row["detection_lo"], row["detection_hi"] = _rate_ci(rate, n)
        row["distance"], row["distance_lo"], row["distance_hi"] = _mean_ci([r.distance for r in rs])
        for gm in gammas:
            acc = gamma_accuracy(rs, gm)
            row[f"gamma_{gm:g}"] = acc
        secs = [r.seconds for r in rs if r.seconds is not None]
        row["seconds"] = float(np.mean(secs)) if secs else None
        rows.append(row)
    return rows


def write_records_csv(records: Sequence[TrialRecord], path) -> None:
    """Records CSV in the fixed column order; missing timings are left blank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            secs = "" if r.seconds is None else f"{r.seconds:.6f}"
            w.writerow([r.algorithm, r.trial, r.source, r.estimator, r.rank, r.distance, r.infected, r.obs_time, secs])


def read_records_csv(path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for row in csv.DictReader(fh):
            out.append(TrialRecord(
                algorithm=row["algorithm"],
                trial=int(row["trial"]),
                source=int(row["source"]),
                estimator=int(row["estimator"]),
                rank=int(row["rank"]),
                distance=int(row["distance"]),
                infected=int(row["infected"]),
                obs_time=int(row["obs_time"]),
                seconds=float(row["seconds"]) if row["seconds"] else None,
            ))
        return out


def write_rows_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    columns = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k)) for k in columns})


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return v
