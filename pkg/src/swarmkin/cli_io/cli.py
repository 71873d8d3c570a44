"""Command line entry point: ``swarmkin <kind> --config FILE [--seed S] [--out DIR]``.

Set ``SWARMKIN_THREADS`` to bound the number of worker threads used by the
compiled kernels.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..model_core import ConfigError
from .config import KINDS, config_from_dict, load_config
from .presets import figure_presets


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmkin",
        description="Swarm coverage kinetic models: equilibria, particle runs, Fokker-Planck solves and entropy decay.",
        epilog="Packaged presets usable as --config: " + ", ".join(figure_presets()) + ". Thread count: SWARMKIN_THREADS.",
    )
    parser.add_argument("kind", choices=KINDS, help="experiment to run (overrides the kind in the config)")
    parser.add_argument("--config", required=True, help="YAML config file or the name of a packaged preset")
    parser.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    parser.add_argument("--out", default=None, help="output directory (created on demand)")
    parser.add_argument("--fit-window", nargs=2, type=float, metavar=("T0", "T1"), help="time window for the entropy decay fit")
    parser.add_argument("--no-plots", action="store_true", help="emit the plot script but do not render it")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def resolve(args) -> object:
    cfg = load_config(args.config)
    raw = cfg.to_dict()
    raw["kind"] = args.kind
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output"] = args.out
    if args.fit_window is not None:
        raw["entropy"]["fit_window"] = list(args.fit_window)
    return config_from_dict(raw, str(args.config))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .runner import run_experiment

    try:
        result = run_experiment(cfg, render=not args.no_plots)
    except (ConfigError, FloatingPointError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(result.manifest.entries)} files to {result.out_dir}")
    return result.status


if __name__ == "__main__":
    sys.exit(main())
