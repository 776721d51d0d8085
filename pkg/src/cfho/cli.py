"""Batch command line interface.

Subcommands:

* ``run`` — run a seeded experiment and export CSV/JSON metrics.
* ``sweep`` — repeat ``run`` over a list of values for one config key.
* ``validate`` — run the oracle suites; exits nonzero on failure.

Exit codes: 0 ok, 1 configuration error, 2 validation failure, 3 I/O error.
The output directory defaults to ``./cfho_out`` and can be overridden by
``--out`` or the ``CFHO_OUT_DIR`` environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import apply_override, load_config
from .errors import ConfigError, ValidationFailure

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfho",
        description="Handoff management experiments for user-centric "
                    "cell-free massive MIMO")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--profile", default="desk",
                       help="base profile: desk or table1 (default: desk)")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--trials", type=int, help="trial count override")
        p.add_argument("--scheme", help="run a single scheme only")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel trial workers (default: 1)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                       help="dotted config override, e.g. network.n_aps=60")

    p_run = sub.add_parser("run", help="run an experiment and export metrics")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run once per value of one key")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         help="dotted config key to sweep")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values")

    p_val = sub.add_parser("validate", help="run the oracle suites")
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--quick", action="store_true",
                       help="reduced sizes for a fast sanity check")
    return parser


def _resolve_out_dir(args) -> str:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get("CFHO_OUT_DIR", "cfho_out")


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key] = value
    cfg = load_config(args.config, profile=args.profile, overrides=overrides)
    if args.seed is not None:
        cfg.seeds.master_seed = int(args.seed)
    if args.trials is not None:
        cfg.seeds.trials = int(args.trials)
    if args.scheme is not None:
        apply_override(cfg, "engine.schemes", (args.scheme,))
    return cfg.validate()


def _cmd_run(args) -> int:
    from .export import write_outputs
    from .harness import run_experiment

    cfg = _config_from_args(args)
    metrics = run_experiment(cfg, workers=args.workers)
    paths = write_outputs(metrics, _resolve_out_dir(args))
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .export import write_outputs
    from .harness import run_experiment

    base_out = _resolve_out_dir(args)
    values = [v for v in args.values.split(",") if v]
    if not values:
        raise ConfigError("--values must list at least one value")
    for value in values:
        cfg = _config_from_args(args)
        apply_override(cfg, args.param, value)
        cfg.validate()
        metrics = run_experiment(cfg, workers=args.workers)
        tag = value.replace("/", "_").replace(" ", "_")
        sub_dir = os.path.join(base_out,
                               f"{args.param.replace('.', '_')}={tag}")
        paths = write_outputs(metrics, sub_dir)
        print(f"{args.param}={value}:")
        for name, path in sorted(paths.items()):
            print(f"  {name}: {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .validate import run_all_validations

    ok, report = run_all_validations(seed=args.seed, quick=args.quick)
    print(report)
    if not ok:
        raise ValidationFailure("one or more oracle suites failed")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailure as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
