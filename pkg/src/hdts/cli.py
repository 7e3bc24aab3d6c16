"""Command-line entry point: ``hdts {run, select-block-size, gauss-lab, list-presets}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from hdts.blocksize import select_block_size
from hdts.exceptions import HdtsError
from hdts.harness import PRESETS, ExperimentConfig, config_from_mapping, load_config, run_experiment, write_outputs
from hdts.numerics import RngStream

WORKERS_ENV = "HDTS_WORKERS"


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def resolve_workers(flag: int | None, config_value: int) -> int:
    """CLI flag, then ``HDTS_WORKERS``, then the config value."""
    if flag is not None:
        return flag
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise HdtsError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return config_value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdts", description="Bootstrap inference for high-dimensional time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo experiment")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="flat TOML or JSON config file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--workers", type=int, help=f"worker processes (0 = all cores); overrides ${WORKERS_ENV}")
    run.add_argument("--seed", type=int)
    run.add_argument("--mc-reps", type=int)
    run.add_argument("--b-reps", type=int)

    sel = sub.add_parser("select-block-size", help="choose a block size for a data matrix")
    sel.add_argument("--data", required=True, help="CSV matrix, one row per time point")
    sel.add_argument("--b-int", type=int, required=True)
    sel.add_argument("--candidates", type=_int_list, default=[4, 6, 8, 10, 12, 15, 20])
    sel.add_argument("--b-outer", type=int, default=500)
    sel.add_argument("--b-reps", type=int, default=499)
    sel.add_argument("--alpha", type=float, default=0.05)
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--max-iterations", type=int, default=1)

    lab = sub.add_parser("gauss-lab", help="Kolmogorov distance and P-P curves for the ARCH design")
    lab.add_argument("--n", type=int, default=60)
    lab.add_argument("--p", type=_int_list, default=[100, 300, 500])
    lab.add_argument("--beta0", type=_float_list, default=[0.0, 0.2, 0.5])
    lab.add_argument("--reps", type=int, default=2000)
    lab.add_argument("--grid-size", type=int, default=199)
    lab.add_argument("--seed", type=int, default=PRESETS["fig1"].seed)
    lab.add_argument("--out", default="out")
    lab.add_argument("--workers", type=int)

    sub.add_parser("list-presets", help="list the named experiment presets")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config else PRESETS[args.preset]
    overrides = {k: v for k, v in (("seed", args.seed), ("mc_reps", args.mc_reps), ("b_reps", args.b_reps)) if v is not None}
    overrides["workers"] = resolve_workers(args.workers, cfg.workers)
    cfg = config_from_mapping(overrides, base=cfg)
    table = run_experiment(cfg)
    for path in write_outputs(table, args.out):
        print(path)
    return 0


def _cmd_select(args) -> int:
    X = np.loadtxt(args.data, delimiter=",", ndmin=2)
    report = select_block_size(
        X, args.b_int, args.candidates, args.b_outer, args.b_reps, args.alpha, RngStream(args.seed), args.max_iterations
    )
    print(json.dumps(dataclasses.asdict(report), indent=2))
    return 0


def _cmd_gauss(args) -> int:
    cfg = ExperimentConfig(
        experiment="Fig1", models=("ArchFig1",), n=args.n, p=tuple(args.p), beta0=tuple(args.beta0),
        mc_reps=args.reps, grid_size=args.grid_size, seed=args.seed,
        workers=resolve_workers(args.workers, 1),
    )
    table = run_experiment(cfg)
    for row in table.rows:
        print(f"{row.cell}: kolmogorov={row.kolmogorov:.4f} max_pp_deviation={row.max_pp_deviation:.4f}")
    for path in write_outputs(table, args.out):
        print(path)
    return 0


def _cmd_list(_args) -> int:
    for name, cfg in sorted(PRESETS.items()):
        print(f"{name:12s} {cfg.experiment:7s} {cfg.procedure:12s} mc_reps={cfg.mc_reps} b_reps={cfg.b_reps} p={list(cfg.p)}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "select-block-size": _cmd_select, "gauss-lab": _cmd_gauss, "list-presets": _cmd_list}
    try:
        return handler[args.command](args)
    except (HdtsError, OSError) as exc:
        print(f"hdts: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
