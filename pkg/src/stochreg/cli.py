"""Command-line entry point.

Each subcommand runs one experiment kind; `simulate` runs whatever kind the
config names.  Exit codes: 0 success, 2 validation failure, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import EXPERIMENTS, ExperimentConfig, load_config
from .errors import NumericalError, ValidationError
from .runner import emit, run

_SUBCOMMANDS = {
    "simulate": None,  # any experiment kind
    "estimate-constant": "maxreg",
    "counterexample": "counterexample",
    "verify-kernels": "kernels",
    "rbound": "rbound",
    "maximal-fn": "maximal-fn",
    "factorization": "factorization",
    "maximal-estimate": "maximal-estimate",
}


def _default_config(kind: str) -> ExperimentConfig:
    from .config import EnsembleConfig, GridConfig, McConfig, ModelConfig
    if kind == "counterexample":
        return ExperimentConfig(experiment=kind,
                                model=ModelConfig(kind="dyadic", q=4.0))
    if kind == "rbound":
        return ExperimentConfig(experiment=kind, p=3.0,
                                model=ModelConfig(q=4.0, eigenvalues=(1.0,)),
                                grid=GridConfig(1.0, 256),
                                ensemble=EnsembleConfig(n_modes=4),
                                mc=McConfig(n_paths=16))
    if kind == "factorization":
        return ExperimentConfig(experiment=kind, theta=0.25,
                                mc=McConfig(n_paths=100))
    if kind == "maximal-estimate":
        return ExperimentConfig(experiment=kind, p=4.0,
                                grid=GridConfig(4.0, 400),
                                mc=McConfig(n_paths=400))
    if kind == "maxreg":
        return ExperimentConfig(experiment=kind, p=2.0,
                                grid=GridConfig(6.0, 2000),
                                ensemble=EnsembleConfig(kind="blocks", count=4))
    return ExperimentConfig(experiment=kind)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochreg",
        description="Stochastic convolution regularity probes")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="override the MC master seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--format", choices=("jsonl", "csv", "both"), default="both")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    kind = _SUBCOMMANDS[args.command]
    if args.config:
        config = load_config(args.config)
        if kind is not None and config.experiment != kind:
            raise ValidationError(
                f"subcommand {args.command} expects a {kind!r} config, "
                f"got {config.experiment!r}")
    else:
        if kind is None:
            raise ValidationError("simulate requires --config")
        config = _default_config(kind)
    updates = {}
    if args.seed is not None:
        from dataclasses import replace
        updates["mc"] = replace(config.mc, master_seed=args.seed)
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.format != "both":
        updates["formats"] = (args.format,)
    if updates:
        from dataclasses import replace
        config = replace(config, **updates)
    if config.experiment not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {config.experiment!r}")
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        record = run(config)
        paths = emit(record, config.out_dir, config.formats)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    for row in record.payload:
        print(f"{row['experiment']}: ratio={row['ratio']}"
              + (f" +- {row['stderr']}" if row.get("stderr") else ""))
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
