"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import BACKEND, __version__
from .config import ConfigError, load_config
from .io import DataError
from .kernels import DegenerateKernelError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("ecsflow")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, help="shorthand for --set seed=N")


def _cfg(args):
    overrides = list(args.set)
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecsflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} core)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ecs", help="compute ECS caches from trial/position/frame directories")
    p.add_argument("input_dir")
    p.add_argument("out_dir")
    _add_config_args(p)

    p = sub.add_parser("pseudo-trials", help="group still images per regime into pseudo-trials")
    p.add_argument("image_dir")
    p.add_argument("out_dir")
    p.add_argument("--group-size", type=int)
    _add_config_args(p)

    for name, hlp in (("fit", "learn kernel weights, clusters and boundaries"),
                      ("bootstrap", "bootstrap stability of the clustering"),
                      ("lambda-select", "choose the entropy weight by split-half stability")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("cache_dir", help="output directory of the ecs command")
        p.add_argument("-o", "--out", required=True, help="JSON report path")
        p.add_argument("--metadata", help="metadata CSV (default: cache_dir/metadata.csv)")
        if name == "fit":
            p.add_argument("--labels", help="CSV with trial_id,label for external evaluation")
        if name == "bootstrap":
            p.add_argument("--fit-report", help="reuse labels and lambda from a fit report")
        _add_config_args(p)

    p = sub.add_parser("synth", help="write a synthetic frame dataset")
    p.add_argument("out_dir")
    p.add_argument("--n-per-regime", type=int, default=4)
    p.add_argument("--positions", type=int, default=1)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--constant-ugs", type=float)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report", help="tidy CSVs from fit and bootstrap reports")
    p.add_argument("reports", nargs="*")
    p.add_argument("-o", "--out-dir", required=True)
    return ap


def run(args) -> dict:
    from . import pipeline

    cmd = args.command
    if cmd == "synth":
        from .synth import SynthConfig, gen_dataset, write_dataset

        trials, labels, frames = gen_dataset(
            args.n_per_regime, seed=args.seed, constant_ugs=args.constant_ugs,
            n_positions=args.positions, base=SynthConfig(T=args.frames), return_frames=True,
        )
        write_dataset(args.out_dir, trials, labels, frames)
        return {"trials": [t.trial_id for t in trials]}
    if cmd == "report":
        return pipeline.cmd_report(args.reports, args.out_dir)
    cfg = _cfg(args)
    if cmd == "ecs":
        return pipeline.cmd_ecs(args.input_dir, args.out_dir, cfg)
    if cmd == "pseudo-trials":
        size = args.group_size or cfg.pseudo_trial_size
        if size < 1:
            raise ConfigError("group size must be >= 1")
        return pipeline.cmd_pseudo_trials(args.image_dir, args.out_dir, size, cfg.seed)
    if cmd == "fit":
        rep = pipeline.cmd_fit(args.cache_dir, args.out, cfg, args.metadata, args.labels)
        return {"beta": rep["beta"], "boundary": rep["boundary"] and rep["boundary"]["boundaries"]}
    if cmd == "bootstrap":
        rep = pipeline.cmd_bootstrap(args.cache_dir, args.out, cfg, args.metadata, args.fit_report)
        return {"ari_mean": rep["ari_mean"], "acc_mean": rep["acc_mean"]}
    if cmd == "lambda-select":
        rep = pipeline.cmd_lambda_select(args.cache_dir, args.out, cfg, args.metadata)
        return {"chosen_lambda": rep["chosen_lambda"]}
    raise ConfigError(f"unknown command {cmd}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        summary = run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateKernelError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.verbose:
        print(json.dumps(summary, default=str, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
