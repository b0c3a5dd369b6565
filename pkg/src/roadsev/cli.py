"""Command-line entry point: ``roadsev <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, ExperimentConfig, load_config
from .ensembles import MODEL_ORDER
from .errors import StageError
from .harness import (cmd_experiment, cmd_importance, cmd_predict, cmd_stats, cmd_synth,
                      cmd_train, with_overrides)
from .metrics import AVERAGINGS
from .synth import SynthSpec


def _experiment_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="CSV input; omit to use the [synth] section of --config")
    p.add_argument("--schema", help="schema file (default: the accident-table schema)")
    p.add_argument("--config", help="INI experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, dest="k_significant", help="number of selected features")
    p.add_argument("--averaging", choices=AVERAGINGS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--paper-faithful", action="store_true", default=None,
                   help="compute importance on all rows, test rows included")
    p.add_argument("--jobs", type=int, dest="n_jobs", help="worker threads")
    p.add_argument("--synthetic", action="store_true",
                   help="use a default synthetic table when no data source is set")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadsev",
                                     description="Accident-severity classification workflow")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="class counts, missing ratios, top values")
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--out", default="stats")
    p.add_argument("--column", default="Weather Condition")

    p = sub.add_parser("experiment", help="two-phase model comparison")
    _experiment_options(p)

    p = sub.add_parser("importance", help="RF permutation importance only")
    _experiment_options(p)

    p = sub.add_parser("train", help="fit one model on all rows and save it")
    _experiment_options(p)
    p.add_argument("--model", required=True, choices=MODEL_ORDER)
    p.add_argument("--model-file", required=True)
    p.add_argument("--features", help="comma-separated encoded feature names")

    p = sub.add_parser("predict", help="predict severities with a saved model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("synth", help="write a synthetic table")
    p.add_argument("--out", required=True)
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--informative", type=int, default=20)
    p.add_argument("--noise", type=int, default=28)
    p.add_argument("--noisy-rows", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def experiment_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = with_overrides(cfg, data=args.data, schema=args.schema, seed=args.seed,
                         k_significant=args.k_significant, averaging=args.averaging,
                         out=args.out, paper_faithful=args.paper_faithful,
                         n_jobs=args.n_jobs)
    if cfg.data is not None and cfg.synth is not None and args.data is not None:
        cfg = replace(cfg, synth=None)
    if cfg.data is None and cfg.synth is None and args.synthetic:
        cfg = replace(cfg, synth=SynthSpec(seed=cfg.seed))
    return cfg


def run(args) -> None:
    if args.command == "stats":
        cmd_stats(args.data, args.schema, args.out, args.column)
        print(f"wrote statistics to {args.out}")
    elif args.command == "synth":
        spec = SynthSpec(n_rows=args.rows, n_informative=args.informative, n_noise=args.noise,
                         noisy_row_fraction=args.noisy_rows, seed=args.seed)
        cmd_synth(spec, args.out)
        print(f"wrote synthetic table to {args.out}")
    elif args.command == "predict":
        pred = cmd_predict(args.model_file, args.data, args.out, args.schema)
        print(f"wrote {len(pred)} predictions to {args.out}")
    else:
        try:
            cfg = experiment_config(args)
        except ConfigError as exc:
            raise StageError("config", exc) from exc
        if args.command == "experiment":
            rep = cmd_experiment(cfg)
            print(rep.tables(), end="")
            print("selected: " + ", ".join(rep.selected))
            print(f"wrote results to {cfg.out}")
        elif args.command == "importance":
            imp = cmd_importance(cfg)
            print("selected: " + ", ".join(imp.selected))
        else:
            features = [f.strip() for f in args.features.split(",")] if args.features else None
            cmd_train(cfg, args.model, args.model_file, features)
            print(f"saved {args.model} to {args.model_file}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error [{args.command}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
