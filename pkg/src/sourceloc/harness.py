"""Config-driven experiment sweeps and timing benchmarks.

Every trial draws its randomness from its own stream keyed by
``(master_seed, size_index, sample_index)``, so results do not depend on
worker count or scheduling. Output rows are sorted before writing.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import ecce_estimate, netsleuth_estimate, rum_estimate
from .diffusion import Snapshot, sample_binomial_tree_window, sample_snapshot_window
from .errors import ConfigError, SourceLocError
from .evaluation import TrialRecord, hop_distance, summarize, write_records_csv, write_rows_csv
from .graph import Graph, assign_weights, build_graph, gen_binomial_tree, gen_er, read_edge_list
from .localization import LocalizationResult, sft_estimate

log = logging.getLogger(__name__)

ALGORITHMS = ("sft-wbnd", "sft-bnd", "ecce", "rum", "netsleuth")
GRAPH_KINDS = ("er", "binomial", "file")

# spawn-key prefixes for the independent random streams
_GRAPH_STREAM = 0
_TRIAL_STREAM = 1


def run_algorithm(name: str, g: Graph, snap: Snapshot, rng: np.random.Generator | None = None) -> LocalizationResult:
    if name == "sft-wbnd":
        return sft_estimate(g, snap, "wbnd")
    if name == "sft-bnd":
        return sft_estimate(g, snap, "bnd")
    if name == "ecce":
        if rng is None:
            raise ValueError("ecce needs a random stream")
        return ecce_estimate(g, snap, rng)
    if name == "rum":
        return rum_estimate(g, snap)
    if name == "netsleuth":
        return netsleuth_estimate(g, snap)
    raise ValueError(f"unknown algorithm {name!r}")


@dataclass
class ExperimentConfig:
    """A sweep over target infection sizes.

    ``graph`` is one of ``{"kind": "er", "n", "p"}``,
    ``{"kind": "binomial", "m", "beta", "budget", "lazy"}`` or
    ``{"kind": "file", "path"}``. ``weights`` = ``[lo, hi]`` redraws every
    q uniformly; ``null`` keeps file weights. ``window`` holds the
    acceptance factors applied to each size.
    """

    graph: dict
    sizes: list[float]
    samples: int
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    master_seed: int = 0
    weights: tuple[float, float] | None = (0.2, 0.5)
    window: tuple[float, float] = (0.75, 1.25)
    max_attempts: int = 1000
    gammas: list[float] = field(default_factory=lambda: [1.0, 5.0, 10.0])
    output: str | None = None
    workers: int = 1
    timing: bool = False
    repeats: int = 3

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        g = self.graph
        if not isinstance(g, dict) or g.get("kind") not in GRAPH_KINDS:
            raise ConfigError(f"graph.kind must be one of {GRAPH_KINDS}")
        kind = g["kind"]
        if kind == "er":
            _need(g, "n", lambda v: isinstance(v, int) and v >= 1, "graph.n must be an integer >= 1")
            _need(g, "p", lambda v: 0 <= v <= 1, "graph.p must lie in [0, 1]")
        elif kind == "binomial":
            _need(g, "m", lambda v: isinstance(v, int) and v >= 0, "graph.m must be an integer >= 0")
            _need(g, "beta", lambda v: 0 <= v <= 1, "graph.beta must lie in [0, 1]")
            g.setdefault("budget", 1_000_000)
            g.setdefault("lazy", True)
            _need(g, "budget", lambda v: isinstance(v, int) and v >= 1, "graph.budget must be an integer >= 1")
            if self.weights is None:
                raise ConfigError("weights: binomial graphs need [lo, hi]")
        else:
            _need(g, "path", lambda v: isinstance(v, str) and v, "graph.path must be a file path")
        if self.weights is not None:
            lo, hi = self.weights
            if not 0 <= lo <= hi <= 1:
                raise ConfigError("weights must satisfy 0 <= lo <= hi <= 1")
            self.weights = (float(lo), float(hi))
        if not self.sizes or any(x < 1 for x in self.sizes):
            raise ConfigError("sizes must be a nonempty list of values >= 1")
        if not isinstance(self.samples, int) or self.samples < 0:
            raise ConfigError("samples must be an integer >= 0")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"algorithms: unknown {bad}; choose from {ALGORITHMS}")
        lo, hi = self.window
        if not 0 < lo <= hi:
            raise ConfigError("window must be [lo_factor, hi_factor] with 0 < lo <= hi")
        self.window = (float(lo), float(hi))
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if any(not 0 < x <= 100 for x in self.gammas):
            raise ConfigError("gammas must lie in (0, 100]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        missing = {"graph", "sizes", "samples"} - set(doc)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        doc = dict(doc)
        for key in ("weights", "window"):
            if doc.get(key) is not None:
                doc[key] = tuple(doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc)


def _need(doc: dict, key: str, ok, msg: str) -> None:
    try:
        good = key in doc and ok(doc[key])
    except TypeError:
        good = False
    if not good:
        raise ConfigError(msg)


def _stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def build_experiment_graph(cfg: ExperimentConfig) -> Graph | None:
    """The shared graph for ER/file configs; ``None`` for lazily grown binomial trees."""
    graph_cfg = cfg.graph
    rng = _stream(cfg.master_seed, _GRAPH_STREAM)
    if graph_cfg["kind"] == "er":
        g = gen_er(graph_cfg["n"], graph_cfg["p"], rng)
    elif graph_cfg["kind"] == "binomial":
        if graph_cfg["lazy"]:
            return None
        g = gen_binomial_tree(graph_cfg["m"], graph_cfg["beta"], graph_cfg["budget"], rng)
    else:
        g = read_edge_list(graph_cfg["path"])
    if cfg.weights is not None:
        g = assign_weights(g, cfg.weights[0], cfg.weights[1], rng)
    return g


def draw_snapshot(cfg: ExperimentConfig, g: Graph | None, x: float, rng: np.random.Generator) -> Snapshot:
    graph_cfg = cfg.graph
    if g is None:
        lo, hi = cfg.weights
        return sample_binomial_tree_window(
            graph_cfg["m"], graph_cfg["beta"], lo, hi, x, rng,
            window=cfg.window, max_attempts=cfg.max_attempts, node_budget=graph_cfg["budget"],
        )
    return sample_snapshot_window(g, x, rng, window=cfg.window, max_attempts=cfg.max_attempts)


# -- trial execution -----------------------------------------------------------

_CTX: dict = {}


def _init_worker(cfg: ExperimentConfig, g: Graph | None) -> None:
    _CTX["cfg"] = cfg
    _CTX["graph"] = g


def _run_trial(task: tuple[int, int]) -> tuple[list[TrialRecord], list[dict]]:
    cfg: ExperimentConfig = _CTX["cfg"]
    si, ki = task
    x = cfg.sizes[si]
    trial = si * cfg.samples + ki
    rng = _stream(cfg.master_seed, _TRIAL_STREAM, si, ki)
    records: list[TrialRecord] = []
    failures: list[dict] = []
    try:
        snap = draw_snapshot(cfg, _CTX["graph"], x, rng)
    except SourceLocError as exc:
        for a in cfg.algorithms:
            failures.append({"size": x, "trial": trial, "algorithm": a, "error": f"{type(exc).__name__}: {exc}"})
        return records, failures
    g = snap.graph
    truth = snap.truth
    for a in cfg.algorithms:
        # each algorithm gets its own stream so adding one never shifts another
        arng = _stream(cfg.master_seed, _TRIAL_STREAM, si, ki, 1 + ALGORITHMS.index(a))
        try:
            t0 = time.perf_counter()
            res = run_algorithm(a, g, snap, arng)
            secs = time.perf_counter() - t0
        except SourceLocError as exc:
            failures.append({"size": x, "trial": trial, "algorithm": a, "error": f"{type(exc).__name__}: {exc}"})
            continue
        records.append(TrialRecord(
            algorithm=a,
            trial=trial,
            source=truth.source,
            estimator=res.estimator,
            rank=res.rank_of(truth.source),
            distance=hop_distance(g, res.estimator, truth.source),
            infected=snap.size,
            obs_time=truth.obs_time,
            seconds=secs if cfg.timing else None,
            size=x,
        ))
    return records, failures


def resolve_workers(requested: int | None, default: int = 1) -> int:
    """``--workers`` if given, else ``RB_WORKERS``, else ``default``."""
    if requested is not None:
        if requested < 1:
            raise ConfigError("--workers must be >= 1")
        return requested
    env = os.environ.get("RB_WORKERS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"RB_WORKERS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError("RB_WORKERS must be >= 1")
        return value
    return default


@dataclass
class ExperimentResult:
    records: list[TrialRecord]
    failures: list[dict]
    summary: list[dict]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, output: str | os.PathLike | None = None) -> ExperimentResult:
    """Run every (size, sample) trial and, if an output directory is set, write
    ``records.csv``, ``summary.csv`` and ``failures.csv`` there."""
    workers = workers if workers is not None else cfg.workers
    g = build_experiment_graph(cfg)
    tasks = [(si, ki) for si in range(len(cfg.sizes)) for ki in range(cfg.samples)]
    records: list[TrialRecord] = []
    failures: list[dict] = []
    if workers <= 1 or len(tasks) <= 1:
        _init_worker(cfg, g)
        outputs = map(_run_trial, tasks)
        for recs, fails in outputs:
            records.extend(recs)
            failures.extend(fails)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(cfg, g)) as pool:
            for recs, fails in pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
                records.extend(recs)
                failures.extend(fails)
    records.sort(key=lambda r: (r.trial, r.algorithm))
    failures.sort(key=lambda f: (f["trial"], f["algorithm"]))
    summary = summarize(records, ("size", "algorithm"), cfg.gammas) if records else []
    out = output if output is not None else cfg.output
    if out is not None:
        write_outputs(Path(out), cfg, records, failures, summary)
    if failures:
        log.warning("%d trial/algorithm pairs failed", len(failures))
    return ExperimentResult(records, failures, summary)


def summary_columns(gammas: Sequence[float]) -> list[str]:
    return (
        ["size", "algorithm", "n", "detection_rate", "detection_lo", "detection_hi",
         "distance", "distance_lo", "distance_hi"]
        + [f"gamma_{g:g}" for g in gammas]
        + ["seconds"]
    )


def write_outputs(out: Path, cfg: ExperimentConfig, records, failures, summary) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_records_csv(records, out / "records.csv")
    write_rows_csv(summary, out / "summary.csv", summary_columns(cfg.gammas))
    write_rows_csv(failures, out / "failures.csv", ["size", "trial", "algorithm", "error"])


# -- benchmark -----------------------------------------------------------------

def _warm_up() -> None:
    g = build_graph(3, [(0, 1, 0.5), (1, 2, 0.5)])
    sft_estimate(g, Snapshot(3, [0, 1, 2]), "bnd")


def bench_sft(cfg: ExperimentConfig, mode: str = "bnd") -> list[dict]:
    """Wall time of :func:`sft_estimate` per snapshot, best of ``cfg.repeats``.

    Each row carries |I|, the total graph degree of I and their product,
    the quantity the running time should scale with.
    """
    _warm_up()
    g = build_experiment_graph(cfg)
    rows = []
    for si, x in enumerate(cfg.sizes):
        for ki in range(cfg.samples):
            rng = _stream(cfg.master_seed, _TRIAL_STREAM, si, ki)
            snap = draw_snapshot(cfg, g, x, rng)
            best = np.inf
            estimator = None
            for _ in range(cfg.repeats):
                t0 = time.perf_counter()
                res = sft_estimate(snap.graph, snap, mode)
                best = min(best, time.perf_counter() - t0)
                if estimator is not None and res.estimator != estimator:
                    raise RuntimeError("sft_estimate is not deterministic")
                estimator = res.estimator
            deg = int(snap.graph.degree[snap.infected].sum())
            rows.append({
                "size": x, "trial": si * cfg.samples + ki, "infected": snap.size,
                "degree_sum": deg, "work": snap.size * deg, "seconds": best, "estimator": estimator,
            })
    return rows


def fit_scaling(rows: Sequence[dict]) -> dict:
    """Least-squares line of seconds against |I|*deg(I), with R^2."""
    x = np.array([r["work"] for r in rows], dtype=np.float64)
    y = np.array([r["seconds"] for r in rows], dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}
