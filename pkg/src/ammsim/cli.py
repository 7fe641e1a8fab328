"""Command-line entry point.

Subcommands:
  run          run a preset or config file and write result files
  gen-market   generate a reference-market CSV
  replay       run a scenario against a previously exported market CSV
  list-presets print the preset catalog
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import engine, market
from .scenario import PRESET_NAMES, ScenarioError, load_scenario

DEFAULT_OUT_ENV = "AMMSIM_OUT_DIR"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ammsim",
        description="Agent-based pool-versus-pool market simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario preset or config file")
    run_p.add_argument("scenario", help=f"preset ({', '.join(PRESET_NAMES)}) or config path")
    run_p.add_argument("--seed", type=int, default=None, help="override master seed")
    run_p.add_argument("--reps", type=int, default=None, help="override repetition count")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--workers", type=int, default=1, help="parallel repetition workers")

    gen_p = sub.add_parser("gen-market", help="generate a reference-market CSV")
    gen_p.add_argument("--s0", type=float, default=1000.0)
    gen_p.add_argument("--mu", type=float, default=0.008, help="drift per day")
    gen_p.add_argument("--sigma", type=float, default=0.077, help="volatility per day")
    gen_p.add_argument("--points-per-day", type=int, default=1000)
    gen_p.add_argument("--days", type=int, default=5)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True, help="output CSV file")

    replay_p = sub.add_parser("replay", help="run a scenario on an exported market CSV")
    replay_p.add_argument("scenario", help="preset or config path")
    replay_p.add_argument("--market", required=True, help="market CSV to replay")
    replay_p.add_argument("--seed", type=int, default=None)
    replay_p.add_argument("--reps", type=int, default=None)
    replay_p.add_argument("--out", default=None)
    replay_p.add_argument("--workers", type=int, default=1)

    sub.add_parser("list-presets", help="print available scenario presets")
    return parser


def _resolve_out(arg_out: str | None, scenario_name: str) -> Path:
    if arg_out is not None:
        return Path(arg_out)
    base = os.environ.get(DEFAULT_OUT_ENV, "results")
    return Path(base) / scenario_name


def _load(args) -> "engine.ScenarioConfig":
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.reps is not None:
        if args.reps < 1:
            raise ScenarioError("--reps must be >= 1")
        cfg = replace(cfg, repetitions=args.reps)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    out_dir = _resolve_out(args.out, cfg.name)
    report = engine.run_scenario(cfg, out_dir, workers=args.workers)
    print(f"wrote results for {cfg.name!r} ({report.repetitions} repetitions) to {out_dir}")
    for pair, frac in sorted(report.win_fractions.items()):
        print(f"  win fraction {pair}: {frac:.2f}")
    return 0


def _cmd_gen_market(args) -> int:
    n_points = args.points_per_day * args.days + 1
    path = market.generate_gbm(args.s0, args.mu, args.sigma, n_points,
                               1.0 / args.points_per_day, args.seed)
    market.write_csv(path, args.out)
    print(f"wrote {len(path)} points to {args.out}")
    return 0


def _cmd_replay(args) -> int:
    cfg = _load(args)
    path = market.read_csv(args.market, s0=cfg.gbm.s0, mu=cfg.gbm.mu,
                           sigma=cfg.gbm.sigma)
    expected = cfg.gbm.points_per_day * cfg.gbm.days + 1
    if len(path) < expected:
        raise ScenarioError(
            f"market file has {len(path)} points; scenario needs {expected}")
    out_dir = _resolve_out(args.out, cfg.name)
    report = engine.run_scenario(cfg, out_dir, workers=args.workers, path=path)
    print(f"replayed {cfg.name!r} on {args.market} ({report.repetitions} repetitions)")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gen-market":
            return _cmd_gen_market(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "list-presets":
            for name in PRESET_NAMES:
                print(name)
            return 0
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
