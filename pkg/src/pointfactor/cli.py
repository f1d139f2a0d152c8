"""Command-line frontend.

Subcommands:
  gen       generate point configurations only
  build     run the requested constructions on existing points
  analyze   run the requested analyses (recomputing constructions)
  run       gen + build + analyze in one pass
  oracle    brute-force comparison suite on small random instances

Exit codes: 0 success, 1 a hard invariant failed, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .experiment import (
    OUTPUT_ROOT_ENV,
    ConfigError,
    load_config,
    run_experiment,
    run_oracle_suite,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config file (YAML)")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--runs", type=int, default=None, help="override the run count")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def _resolve_out(args, config) -> str:
    if args.out:
        return args.out
    if config.out_dir:
        return config.out_dir
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return os.path.join(root, "out") if root else "out"


_STAGES = {
    "gen": ("gen",),
    "build": ("build",),
    "analyze": ("analyze",),
    "run": ("gen", "build", "analyze"),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pointfactor",
        description="Simulate point processes and build their factor graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen", "build", "analyze", "run"):
        p = sub.add_parser(name)
        _add_common(p)
    p_oracle = sub.add_parser("oracle")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--trials", type=int, default=25)

    args = parser.parse_args(argv)

    if args.command == "oracle":
        results = run_oracle_suite(args.seed, args.trials)
        for name, row in results.items():
            if isinstance(row, dict):
                status = "PASS" if row["passed"] == row["trials"] else "FAIL"
                print(f"{status} {name}: {row['passed']}/{row['trials']}")
        return 0 if results["ok"] else 1

    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.master_seed = args.seed
        if args.runs is not None:
            config.runs = args.runs
        out_dir = _resolve_out(args, config)
        outcome = run_experiment(
            config, stages=_STAGES[args.command], jobs=args.jobs, out_dir=out_dir
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(outcome.summary, indent=2, sort_keys=True))
    if outcome.exit_code != 0:
        print("hard invariant failure; see summary above", file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
