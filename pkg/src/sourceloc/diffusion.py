"""Independent Cascade simulation, the live-edge sampler, and snapshots.

Time is slotted. The source is active at t=0; in every slot each node that
became active in the previous slot tries each still-inactive neighbour once,
succeeding with the edge's q. Since a node is "newly active" exactly once,
every directed attempt happens at most once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSnapshot, NodeOutOfRange, ParseError, WindowUnreachable
from .graph import Graph, _build_from_arrays, bfs_distances


@dataclass(frozen=True)
class Truth:
    source: int
    obs_time: int
    times: dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """A complete observation: infected set I (sorted ids), healthy = the rest.

    ``truth`` is ground truth for scoring only; localizers never read it.
    ``graph`` is the network the snapshot was taken on (may be ``None`` for a
    snapshot loaded from disk without its graph).
    """

    n: int
    infected: np.ndarray
    truth: Truth | None = None
    graph: Graph | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        arr = np.unique(np.asarray(self.infected, dtype=np.int64))
        arr.setflags(write=False)
        object.__setattr__(self, "infected", arr)

    @property
    def size(self) -> int:
        return len(self.infected)

    def healthy(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.infected] = False
        return np.flatnonzero(mask)

    def with_graph(self, g: Graph) -> "Snapshot":
        return Snapshot(self.n, self.infected, self.truth, g)

    def validate(self, g: Graph | None = None) -> None:
        """Check connectivity and infection-time consistency; raise InvalidSnapshot."""
        g = g if g is not None else self.graph
        if g is None:
            raise InvalidSnapshot("no graph to validate against")
        if g.n != self.n:
            raise InvalidSnapshot(f"snapshot has n={self.n}, graph has n={g.n}")
        if self.size == 0:
            raise InvalidSnapshot("empty infected set")
        if self.infected[0] < 0 or self.infected[-1] >= self.n:
            raise InvalidSnapshot("infected id out of range")
        from .localization import infection_subgraph  # connectivity lives there

        infection_subgraph(g, self.infected)
        if self.truth is None:
            return
        t = self.truth
        if t.source not in set(self.infected.tolist()):
            raise InvalidSnapshot(f"source {t.source} is not infected")
        if t.times:
            if set(t.times) != set(self.infected.tolist()):
                raise InvalidSnapshot("infection times must cover exactly the infected set")
            if t.times[t.source] != 0:
                raise InvalidSnapshot("source must be infected at time 0")
            for u, k in t.times.items():
                if k > t.obs_time:
                    raise InvalidSnapshot(f"node {u} infected at {k} after observation {t.obs_time}")
                if k > 0 and not any(t.times.get(int(w)) == k - 1 for w in g.neighbors(u)):
                    raise InvalidSnapshot(f"node {u} infected at {k} has no neighbour infected at {k - 1}")

    # -- JSON ------------------------------------------------------------------

    def to_json(self) -> dict:
        doc: dict = {"n": self.n, "infected": self.infected.tolist()}
        if self.truth is not None:
            doc["truth"] = {
                "source": self.truth.source,
                "obs_time": self.truth.obs_time,
                "times": {str(k): v for k, v in sorted(self.truth.times.items())},
            }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Snapshot":
        try:
            n = int(doc["n"])
            infected = [int(x) for x in doc["infected"]]
            truth = None
            if doc.get("truth") is not None:
                t = doc["truth"]
                times = {int(k): int(v) for k, v in (t.get("times") or {}).items()}
                truth = Truth(int(t["source"]), int(t["obs_time"]), times)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed snapshot document: {exc!r}") from exc
        return cls(n, np.array(infected, dtype=np.int64), truth)


def save_snapshot(snap: Snapshot, path) -> None:
    Path(path).write_text(json.dumps(snap.to_json(), indent=1) + "\n", encoding="utf-8")


def load_snapshot(path) -> Snapshot:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", exc.lineno) from exc
    return Snapshot.from_json(doc)


# -- IC process ----------------------------------------------------------------

def _gather_rows(indptr: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Concatenated CSR slot indices of ``rows``."""
    starts = indptr[rows]
    lengths = indptr[rows + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return offsets + np.arange(total)


class ICProcess:
    """Resumable IC run: call :meth:`step` once per time slot."""

    def __init__(self, g: Graph, source: int, rng: np.random.Generator):
        if not 0 <= source < g.n:
            raise NodeOutOfRange(f"source {source} outside [0, {g.n})")
        self.g = g
        self.source = int(source)
        self.rng = rng
        self.t = 0
        self.times = np.full(g.n, -1, dtype=np.int64)
        self.times[source] = 0
        self.frontier = np.array([source], dtype=np.int64)
        self.size = 1

    @property
    def alive(self) -> bool:
        return self.frontier.size > 0

    def step(self) -> int:
        """Advance one slot; return how many nodes became active."""
        g = self.g
        slots = _gather_rows(g.indptr, self.frontier)
        targets = g.indices[slots]
        open_ = self.times[targets] < 0
        targets = targets[open_]
        hit = self.rng.random(targets.size) < g.weights[slots[open_]]
        new = np.unique(targets[hit])
        self.t += 1
        self.times[new] = self.t
        self.frontier = new
        self.size += new.size
        return int(new.size)

    def infected(self) -> np.ndarray:
        return np.flatnonzero(self.times >= 0)

    def snapshot(self) -> Snapshot:
        inf = self.infected()
        times = dict(zip(inf.tolist(), self.times[inf].tolist()))
        return Snapshot(self.g.n, inf, Truth(self.source, self.t, times), self.g)


def simulate_ic(g: Graph, source: int, t: int, rng: np.random.Generator) -> Snapshot:
    """Run IC from ``source`` for ``t`` slots and return the snapshot at time ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    proc = ICProcess(g, source, rng)
    for _ in range(t):
        if not proc.alive:
            proc.t = t
            break
        proc.step()
    return proc.snapshot()


# -- live-edge view ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LiveEdgeGraph:
    graph: Graph
    live: np.ndarray  # bool per canonical edge

    def live_graph(self) -> Graph:
        g = self.graph
        return _build_from_arrays(g.n, g.edges[self.live], g.q[self.live])


def sample_live_edge(g: Graph, rng: np.random.Generator) -> LiveEdgeGraph:
    """Flip every edge's coin up front: live with probability q."""
    live = rng.random(g.num_edges) < g.q
    live.setflags(write=False)
    return LiveEdgeGraph(g, live)


def snapshot_from_live_edge(le: LiveEdgeGraph, source: int, t: int) -> Snapshot:
    """Nodes within ``t`` live hops of ``source`` are infected, at their live distance."""
    g = le.graph
    if not 0 <= source < g.n:
        raise NodeOutOfRange(f"source {source} outside [0, {g.n})")
    lg = le.live_graph()
    dist = bfs_distances(lg, source, cutoff=t)
    inf = np.flatnonzero(dist >= 0)
    times = dict(zip(inf.tolist(), dist[inf].tolist()))
    return Snapshot(g.n, inf, Truth(int(source), int(t), times), g)


# -- size-window sampling ------------------------------------------------------

def _window_bounds(x: float, window: tuple[float, float]) -> tuple[float, float]:
    if x < 1:
        raise ValueError("target size x must be >= 1")
    lo, hi = window
    if not 0 < lo <= hi:
        raise ValueError(f"bad window factors {window}")
    return lo * x, hi * x


def sample_snapshot_window(
    g: Graph,
    x: float,
    rng: np.random.Generator,
    window: tuple[float, float] = (0.75, 1.25),
    max_attempts: int = 1000,
) -> Snapshot:
    """Draw a snapshot whose infected count lies in ``[window[0]*x, window[1]*x]``.

    Each attempt picks a uniform source and steps IC slot by slot, stopping
    at the first slot where the count reaches the lower bound. The attempt
    is kept if the count is also within the upper bound and discarded
    otherwise (also discarded if the cascade dies out first).
    """
    lower, upper = _window_bounds(x, window)
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if g.n < lower:
        raise WindowUnreachable(f"graph has {g.n} nodes, window needs at least {lower:g}")
    for _ in range(max_attempts):
        proc = ICProcess(g, int(rng.integers(g.n)), rng)
        while proc.size < lower and proc.alive:
            proc.step()
        if lower <= proc.size <= upper:
            return proc.snapshot()
    raise WindowUnreachable(
        f"no snapshot with {lower:g} <= |I| <= {upper:g} after {max_attempts} attempts"
    )


def sample_binomial_tree_window(
    m: int,
    beta: float,
    lo: float,
    hi: float,
    x: float,
    rng: np.random.Generator,
    window: tuple[float, float] = (0.75, 1.25),
    max_attempts: int = 1000,
    node_budget: int = 1_000_000,
) -> Snapshot:
    """Window-sampled IC snapshot on a binomial tree grown on demand.

    The tree is generated together with the cascade: a node's Bi(m, beta)
    children (with q ~ U(lo, hi)) are drawn when the node becomes infected.
    Every infected node therefore has all its children present, which is all
    a complete snapshot can reveal about an unbounded binomial tree. The
    source is the root. Node ids are shuffled so that id-order tie-breaks do
    not favour the source. ``node_budget`` caps the materialised tree; an
    attempt that would exceed it is discarded.
    """
    lower, upper = _window_bounds(x, window)
    for _ in range(max_attempts):
        parents = [-1]
        qs = [0.0]
        times = [0]

        def spawn(u: int) -> list[int]:
            k = int(rng.binomial(m, beta))
            first = len(parents)
            parents.extend([u] * k)
            qs.extend(rng.uniform(lo, hi, size=k).tolist())
            times.extend([-1] * k)
            return list(range(first, first + k))

        children = {0: spawn(0)}
        frontier = [0]
        size = 1
        t = 0
        overflow = False
        while size < lower and frontier:
            t += 1
            new = []
            for u in frontier:
                kids = children[u]
                if not kids:
                    continue
                draws = rng.random(len(kids))
                for c, r in zip(kids, draws):
                    if r < qs[c]:
                        times[c] = t
                        new.append(c)
            for c in new:
                children[c] = spawn(c)
            size += len(new)
            frontier = new
            if len(parents) > node_budget:
                overflow = True
                break
        if overflow or not lower <= size <= upper:
            continue
        total = len(parents)
        perm = rng.permutation(total)
        par = np.array(parents[1:], dtype=np.int64)
        kid = np.arange(1, total, dtype=np.int64)
        uv = np.stack([perm[par], perm[kid]], axis=1)
        g = _build_from_arrays(total, uv, np.array(qs[1:], dtype=np.float64))
        tarr = np.array(times, dtype=np.int64)
        inf_old = np.flatnonzero(tarr >= 0)
        times_new = dict(zip(perm[inf_old].tolist(), tarr[inf_old].tolist()))
        return Snapshot(total, perm[inf_old], Truth(int(perm[0]), t, times_new), g)
    raise WindowUnreachable(
        f"no binomial-tree snapshot with {lower:g} <= |I| <= {upper:g} after {max_attempts} attempts"
    )
