"""Command line entry point.

    cqpt run <config> [overrides]   run an experiment from a key=value config
    cqpt list-experiments           show the available experiment names
    cqpt verify <manifest>          recheck the hashes recorded in a manifest

Exit codes: 0 success, 1 config error, 2 numerical failure.
"""

import argparse
import sys

from . import experiments

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cqpt")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", help="path to a key=value config file")
    run.add_argument("--experiment", default=None)
    run.add_argument("--qubits", default=None, help="comma-separated qubit counts")
    run.add_argument("--seed", default=None)
    run.add_argument("--gamma-grid", dest="gamma_grid", default=None)
    run.add_argument("--p-grid", dest="p_grid", default=None)
    run.add_argument("--t-grid", dest="t_grid", default=None)
    run.add_argument("--retraction", default=None)
    run.add_argument("--max-iters", dest="max_iters", default=None)
    run.add_argument("--learning-rate", dest="learning_rate", default=None)
    run.add_argument("--cost-tol", dest="cost_tol", default=None)
    run.add_argument("--cost-tol-rel", dest="cost_tol_rel", default=None)
    run.add_argument("--out", dest="out_dir", default=None)

    sub.add_parser("list-experiments", help="list available experiment names")

    verify = sub.add_parser("verify", help="verify an experiment manifest")
    verify.add_argument("manifest")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for name in experiments.EXPERIMENTS:
            print(name)
        return EXIT_OK

    if args.command == "verify":
        try:
            problems = experiments.verify_manifest(args.manifest)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if problems:
            for problem in problems:
                print(problem, file=sys.stderr)
            return EXIT_NUMERICAL
        print("manifest ok")
        return EXIT_OK

    # run
    overrides = {key: getattr(args, key) for key in
                 ("experiment", "qubits", "seed", "gamma_grid", "p_grid",
                  "t_grid", "retraction", "max_iters", "learning_rate",
                  "cost_tol", "cost_tol_rel", "out_dir")}
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = experiments.parse_config(text, overrides)
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        written = experiments.run_experiment(cfg)
    except OSError as exc:
        print(f"config error: output path: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
