"""Command-line entry point.

Every subcommand maps onto one pipeline stage (or an explicit sweep) and
works against an output directory of artifacts.  Known failures exit 1
with a one-line JSON error document on stderr so callers can branch on
the ``error`` code without parsing prose.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import __version__
from .config import RunConfig, load_config, reference_text
from .errors import ErrmapError
from .io import read_json
from .pipeline import (
    STAGE_ORDER,
    Workspace,
    run_pipeline,
    run_sweep_features,
    run_sweep_size,
    run_stage,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="INI configuration file")
    p.add_argument("--out-dir", default="./out", help="artifact directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="errmap",
        description="Model the error structure of a district heating energy model.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pipeline", help="run every stale stage up to --stage")
    _add_common(p)
    p.add_argument("--stage", default="grid", choices=STAGE_ORDER)

    for name, help_text in (
        ("synth", "generate synthetic district measurements"),
        ("clean", "flag faulty samples and atypical seasons"),
        ("calibrate", "fit building parameters per window"),
        ("build-ve", "assemble the validation-error dataset"),
        ("select", "fit transforms and rank features"),
        ("grid", "export error and uncertainty surfaces"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("train", help="train the error model")
    _add_common(p)
    p.add_argument("--features", default=None, help="comma-separated feature names")
    p.add_argument("--n", type=int, default=None, help="training size")

    p = sub.add_parser("eval", help="interpolation and extrapolation scores")
    _add_common(p)
    p.add_argument("--split", default=None, choices=("interpolation", "extrapolation"))

    p = sub.add_parser("sweep-size", help="score versus training-set size")
    _add_common(p)
    p.add_argument("--sizes", default=None, help="comma-separated sizes")
    p.add_argument("--features", type=int, default=3, help="leading features to use")

    p = sub.add_parser("sweep-features", help="score versus feature count")
    _add_common(p)
    p.add_argument("--ks", default=None, help="comma-separated feature counts")
    p.add_argument("--n", type=int, default=None, help="training size")

    p = sub.add_parser("config", help="print the configuration reference")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(
            cfg, scenario=dataclasses.replace(cfg.scenario, seed=args.seed)
        )
    if args.command == "train":
        train = cfg.train
        if args.features is not None:
            names = tuple(s.strip() for s in args.features.split(",") if s.strip())
            train = dataclasses.replace(train, features=names)
        if args.n is not None:
            train = dataclasses.replace(train, n=args.n)
        cfg = dataclasses.replace(cfg, train=train)
    return cfg


def _print_statuses(statuses: dict[str, str]) -> None:
    for stage, status in statuses.items():
        print(f"{stage}: {status}")


def _print_eval_summary(ws: Workspace, split: str | None) -> None:
    splits = (split,) if split else ("interpolation", "extrapolation")
    for name in splits:
        doc = read_json(ws.path(f"eval_{name}.json"))
        agg = doc["aggregate"]
        print(f"{name} (n={doc['n']}, {len(doc['seeds'])} seeds)")
        print("  metric       overall      fold min     fold max")
        for metric in ("mse", "coverage95", "nlpd"):
            lo = min(min(f[metric] for f in r["folds"]) for r in doc["reports"])
            hi = max(max(f[metric] for f in r["folds"]) for r in doc["reports"])
            print(
                f"  {metric:<12} {agg[metric]['mean']:<12.4g} {lo:<12.4g} {hi:<12.4g}"
            )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "config":
            print(reference_text())
            return 0
        cfg = _config_from_args(args)
        if args.command == "pipeline":
            _print_statuses(run_pipeline(cfg, args.out_dir, upto=args.stage))
            return 0
        if args.command in STAGE_ORDER:
            run_stage(cfg, args.out_dir, args.command)
            print(f"{args.command}: ran")
            if args.command == "eval":
                _print_eval_summary(Workspace.at(args.out_dir), getattr(args, "split", None))
            return 0
        if args.command == "sweep-size":
            sizes = (
                [int(s) for s in args.sizes.split(",")] if args.sizes else None
            )
            paths = run_sweep_size(cfg, args.out_dir, sizes, n_features=args.features)
            for p in paths:
                print(p)
            return 0
        if args.command == "sweep-features":
            ks = [int(s) for s in args.ks.split(",")] if args.ks else None
            paths = run_sweep_features(cfg, args.out_dir, ks, n=args.n)
            for p in paths:
                print(p)
            return 0
        raise AssertionError(f"unhandled command {args.command!r}")
    except ErrmapError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
