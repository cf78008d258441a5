"""Command line entry point.

    quadsim run --experiment NAME [--config PATH] [--seed N] [--out DIR]
    quadsim sweep --experiment error_sweep [--out DIR]
    quadsim keys

Exit status is 0 when every criterion passes, 1 when any fails and 2 for
configuration or I/O errors.
"""
import argparse
import logging
import sys

from .config import ConfigInvalid, describe_keys
from .experiments import EXPERIMENTS, UnknownExperiment, run_experiment
from .telemetry import IoFailure

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _seed(text):
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="quadsim", description="Quadrotor SO(3) control experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulation experiment")
    run_p.add_argument("--experiment", required=True, help=", ".join(EXPERIMENTS))
    run_p.add_argument("--config", help="key = value overrides applied to the preset")
    run_p.add_argument("--seed", type=_seed, help="RNG seed (overrides the config)")
    run_p.add_argument("--out", default="out", help="output directory")

    sweep_p = sub.add_parser("sweep", help="run a property sweep")
    sweep_p.add_argument("--experiment", default="error_sweep")
    sweep_p.add_argument("--out", default="out")

    sub.add_parser("keys", help="list config file keys")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "keys":
        print(describe_keys())
        return EXIT_PASS
    try:
        if args.command == "sweep":
            results = run_experiment(args.experiment, args.out)
        else:
            results = run_experiment(args.experiment, args.out, args.config, args.seed)
    except (UnknownExperiment, ConfigInvalid, IoFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for c in results:
        print(c.line())
    return EXIT_PASS if all(c.passed for c in results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
