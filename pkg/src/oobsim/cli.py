"""Command-line entry point.

One subcommand per experiment; flags override config-file values. Exit
codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import sys
import traceback

from oobsim.config import EXPERIMENTS, ConfigError, config_from_dict, load_config
from oobsim.experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oobsim",
        description="Out-of-band radiation experiments for large antenna arrays",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out-dir", metavar="PATH", help="output directory for CSV artifacts")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed")
        p.add_argument("--realizations", type=int, metavar="N", help="Monte-Carlo realizations")
        p.add_argument(
            "--profile", choices=("ci", "paper"), help="desk-scale or publication-scale defaults"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "out_dir": args.out_dir,
        "master_seed": args.seed,
        "num_realizations": args.realizations,
        "profile": args.profile,
    }
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = config_from_dict({}, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_experiment(cfg)
    except Exception:
        traceback.print_exc()
        return 3
    for attr in ("csv_path", "summary_path", "map_path"):
        path = getattr(result, attr, None)
        if path:
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
