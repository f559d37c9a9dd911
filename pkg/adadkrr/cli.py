"""
Command line entry point.

    adadkrr run <config-or-preset> [--seed S] [--out-dir DIR] [--threads T]
    adadkrr presets list
    adadkrr gen-data <preset> <out.csv> [--seed S]

Exit codes: 0 on success, 1 if any experiment row aborted, 2 on a config error.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace

import pandas as pd

from . import constants
from .data import gen_synthetic
from .errors import ConfigError
from .experiment import emit_outputs, list_presets, load_config, run_experiment
from .utils import derive_seed

logger = logging.getLogger(__name__)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adadkrr",
        description="Adaptive distributed kernel ridge regression over simulated data silos.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress bar")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="JSON config file or preset name")
    run.add_argument("--seed", type=int, default=None, help="master seed")
    run.add_argument("--out-dir", default=None, help="output directory")
    run.add_argument(
        "--threads",
        type=int,
        default=None,
        help="machine-level parallelism (default: logical cores)",
    )

    presets = sub.add_parser("presets", help="inspect shipped presets")
    presets.add_argument("action", choices=["list"])

    gen = sub.add_parser("gen-data", help="write a synthetic preset's training data as CSV")
    gen.add_argument("preset", help="synthetic preset name or config file")
    gen.add_argument("out", help="output CSV path")
    gen.add_argument("--seed", type=int, default=None, help="master seed")
    gen.add_argument("--trial", type=int, default=0, help="trial index")
    return parser


def _run(args):
    config = load_config(args.config, seed=args.seed, out_dir=args.out_dir, threads=args.threads)
    if config.threads is None:
        config = replace(config, threads=os.cpu_count())
    result = run_experiment(config, progress=not args.quiet)
    for path in emit_outputs(result, config.out_dir):
        logger.info("wrote %s", path)
    if result.aborted:
        logger.warning("%d row(s) aborted, see aborted.csv", len(result.aborted))
        return 1
    return 0


def _presets(args):
    for name, desc in list_presets():
        print(f"{name:16s} {desc}")
    return 0


def _gen_data(args):
    config = load_config(args.preset, seed=args.seed)
    ds = config.dataset
    if ds.kind != "synthetic":
        raise ConfigError(f"{args.preset} is not a synthetic preset")
    tseed = derive_seed(config.seed, args.trial)
    train, clean = gen_synthetic(ds.target, ds.train_size, ds.dim, ds.noise_std, derive_seed(tseed, 0))
    df = pd.DataFrame(train.inputs, columns=[f"x{i + 1}" for i in range(ds.dim)])
    df["y"] = train.outputs
    df["y_clean"] = clean
    df.to_csv(args.out, index=False, float_format=constants.float_format)
    logger.info("wrote %d rows to %s", len(df), args.out)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    handlers = {"run": _run, "presets": _presets, "gen-data": _gen_data}
    try:
        return handlers[args.command](args)
    except ConfigError as e:
        logger.error("config error: %s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
