"""Command line: generate | simulate | localize | experiment | bench.

Exit codes: 0 success, 1 usage error (bad flags, missing or invalid config),
2 data error (unparseable or inconsistent graph/snapshot, unreachable window).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import load_snapshot, sample_snapshot_window, save_snapshot, simulate_ic
from .errors import ConfigError, SourceLocError
from .evaluation import write_rows_csv
from .graph import assign_weights, gen_binomial_tree, gen_er, read_edge_list, write_edge_list
from .harness import ALGORITHMS, ExperimentConfig, bench_sft, fit_scaling, resolve_workers, run_algorithm, run_experiment

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _existing(path: str | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file {path!r}")
    return p


def cmd_generate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "er":
        if args.n is None or args.p is None:
            raise UsageError("generate --kind er needs --n and --p")
        g = gen_er(args.n, args.p, rng)
    else:
        if args.m is None or args.beta is None or args.budget is None:
            raise UsageError("generate --kind binomial needs --m, --beta and --budget")
        g = gen_binomial_tree(args.m, args.beta, args.budget, rng)
    if args.lo is not None or args.hi is not None:
        if args.lo is None or args.hi is None:
            raise UsageError("--lo and --hi go together")
        g = assign_weights(g, args.lo, args.hi, rng)
    write_edge_list(g, args.out)
    print(f"wrote {g.n} nodes, {g.num_edges} edges to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    g = read_edge_list(_existing(args.graph, "--graph"))
    rng = np.random.default_rng(args.seed)
    if args.size is not None:
        snap = sample_snapshot_window(g, args.size, rng, window=tuple(args.window), max_attempts=args.max_attempts)
    else:
        if args.source is None or args.time is None:
            raise UsageError("simulate needs --size, or both --source and --time")
        snap = simulate_ic(g, args.source, args.time, rng)
    save_snapshot(snap, args.out)
    print(f"wrote snapshot with {snap.size} infected nodes (t={snap.truth.obs_time}) to {args.out}")
    return 0


def cmd_localize(args) -> int:
    g = read_edge_list(_existing(args.graph, "--graph"))
    snap = load_snapshot(_existing(args.snapshot, "--snapshot"))
    snap.validate(g)
    res = run_algorithm(args.algo, g, snap, np.random.default_rng(args.seed))
    print(res.estimator)
    scores = res.scores
    for i, u in enumerate(res.ranking[: args.top], start=1):
        ecc, score, _ = scores[int(u)]
        ecc_txt = "-" if ecc is None else str(ecc)
        print(f"{i}\t{u}\t{ecc_txt}\t{score:.6g}")
    return 0


def _load_config(args) -> ExperimentConfig:
    path = _existing(args.config, "--config")
    cfg = ExperimentConfig.load(path)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if getattr(args, "gamma", None):
        cfg.gammas = list(args.gamma)
    cfg.validate()
    return cfg


def cmd_experiment(args) -> int:
    cfg = _load_config(args)
    out = args.out or cfg.output
    if out is None:
        raise UsageError("no output directory: pass --out or set 'output' in the config")
    workers = resolve_workers(args.workers, default=cfg.workers)
    res = run_experiment(cfg, workers=workers, output=out)
    for row in res.summary:
        print(f"size={row['size']:g}\t{row['algorithm']}\tn={row['n']}\tdetection={row['detection_rate']:.3f}\tdistance={row['distance']:.3f}")
    if res.failures:
        print(f"{len(res.failures)} failed trial/algorithm pairs (see failures.csv)", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    rows = bench_sft(cfg, mode=args.mode)
    fit = fit_scaling(rows) if len(rows) >= 2 else None
    if args.out:
        write_rows_csv(rows, args.out, ["size", "trial", "infected", "degree_sum", "work", "seconds", "estimator"])
    for r in rows:
        print(f"|I|={r['infected']}\tdeg(I)={r['degree_sum']}\tseconds={r['seconds']:.4f}")
    if fit is not None:
        print(json.dumps(fit))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sourceloc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a random graph as an edge list")
    g.add_argument("--kind", choices=("er", "binomial"), default="er")
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--m", type=int)
    g.add_argument("--beta", type=float)
    g.add_argument("--budget", type=int)
    g.add_argument("--lo", type=float, help="lower bound of uniform edge probabilities")
    g.add_argument("--hi", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="draw an IC snapshot on a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--size", type=float, help="target infected count (window sampling)")
    s.add_argument("--window", type=float, nargs=2, default=(0.75, 1.25), metavar=("LO", "HI"))
    s.add_argument("--max-attempts", type=int, default=1000)
    s.add_argument("--source", type=int)
    s.add_argument("--time", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    loc = sub.add_parser("localize", help="estimate the source of a snapshot")
    loc.add_argument("--graph", required=True)
    loc.add_argument("--snapshot", required=True)
    loc.add_argument("--algo", choices=ALGORITHMS, default="sft-wbnd")
    loc.add_argument("--seed", type=int, default=0, help="tie-break stream for ecce")
    loc.add_argument("--top", type=int, default=10, help="ranking entries to print")
    loc.set_defaults(func=cmd_localize)

    e = sub.add_parser("experiment", help="run a config-driven sweep")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.add_argument("--workers", type=int)
    e.add_argument("--gamma", type=float, nargs="+")
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="time SFT across infection sizes")
    b.add_argument("--config", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.add_argument("--mode", choices=("wbnd", "bnd"), default="bnd")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SourceLocError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
