#!/usr/bin/env python3
"""
Wahkon: deep RKHS superposition networks for nonparametric regression

Main entry point. Every link of the network is a learned univariate kernel
function; the last layer is solved in closed form by kernel ridge regression
and the lower layers are trained on the profiled objective.

Commands:
- train      fit a model on a dataset CSV (x1,...,xD,y)
- predict    predict a CSV with a saved model
- benchmark  test-RMSE sweep over training sizes on a synthetic benchmark
- compare    profile versus direct objective on one benchmark sample
- tune       Bayesian optimization of the last-layer penalty
- prior      Mahalanobis and moment diagnostics of the hierarchical prior

Configuration System:
- Presets 'default', 'desk', 'prior_study', 'cite_seq' (--preset)
- All parameters centralized in wahkon.config
- Precedence: preset < --config file < --set key=value < --seed
"""

import argparse
import logging
import sys

from wahkon import commands
from wahkon.config import PRESETS, get_config, parse_assignment, set_configuration
from wahkon.errors import WahkonError

COMMANDS = ("train", "predict", "benchmark", "compare", "tune", "prior")


def _config_epilog():
    lines = ["configuration keys (default preset values):"]
    for key, default, text in get_config().describe():
        lines.append(f"  {key:<22} {str(default):<34} {text}")
    lines.append("override any key with --set key=value")
    return "\n".join(lines)


def _add_common(parser):
    parser.add_argument("--preset", choices=PRESETS, default="default",
                        help="configuration preset (default: default)")
    parser.add_argument("--config", help="JSON file of configuration overrides")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    parser.add_argument("--seed", type=int, help="master seed (overrides the configured seed)")
    parser.add_argument("--out", default="out", help="output directory for run folders (default: out)")
    parser.add_argument("--dry-run", action="store_true",
                        help="print the resolved configuration and exit")
    parser.add_argument("--verbose", action="store_true", help="debug logging")


def build_parser():
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        description="Wahkon deep RKHS superposition networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_config_epilog())
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "train a model on a dataset CSV",
        "predict": "predict a CSV with a saved model",
        "benchmark": "test-RMSE sweep over training sizes",
        "compare": "profile versus direct objective",
        "tune": "tune the last-layer penalty",
        "prior": "prior diagnostics",
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=helps[name], epilog=_config_epilog(),
                                    formatter_class=argparse.RawDescriptionHelpFormatter)
        if name == "predict":
            sub.add_argument("model", help="model.json from a train run")
        if name in ("train", "predict", "tune"):
            sub.add_argument("data", help="dataset CSV with header x1,...,xD[,y]")
        if name == "train":
            sub.add_argument("--widths", help="layer widths D0,...,DL (default D,D,D,1)")
            sub.add_argument("--lambda-last", type=float, help="fixed last-layer penalty")
        _add_common(sub)
    return parser


def resolve_config(args):
    """Preset, then the config file, then --set pairs and command flags, then --seed."""
    config = set_configuration(args.preset, verbose=False)
    if args.config:
        config.load_file(args.config)
    overrides = dict(parse_assignment(text) for text in args.set)
    if getattr(args, "widths", None):
        overrides["widths"] = args.widths
    if getattr(args, "lambda_last", None) is not None:
        overrides["lambda_last"] = args.lambda_last
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config.apply_overrides(overrides)
    return config


def print_banner(command, config):
    print(f"\n{'='*60}")
    print(f"WAHKON {command.upper()} - Configuration: {config.config_name.upper()}")
    print(f"{'='*60}")
    for key, value in config.get_summary().items():
        print(f"{key}: {value}")
    print(f"{'='*60}\n")


def run_command(args, config):
    if args.command == "train":
        return commands.cmd_train(config, args.data, args.out)
    if args.command == "predict":
        return commands.cmd_predict(config, args.model, args.data, args.out)
    if args.command == "benchmark":
        return commands.cmd_benchmark(config, args.out)
    if args.command == "compare":
        return commands.cmd_compare(config, args.out)
    if args.command == "tune":
        return commands.cmd_tune(config, args.data, args.out)
    return commands.cmd_prior(config, args.out)


def main(argv=None):
    """
    Run one command; returns the process exit code.

    0 success, 2 input validation, 3 training or numerical failure,
    4 corrupt artifact.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        config = resolve_config(args)
        print_banner(args.command, config)
        if args.dry_run:
            return 0
        run_dir = run_command(args, config)
    except WahkonError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2

    print("\n" + "="*60)
    print(f"Outputs written to: {run_dir}")
    print("="*60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
