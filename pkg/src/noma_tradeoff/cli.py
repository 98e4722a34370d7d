"""
Command line interface of the experiment suite.

Usage:
    noma-tradeoff alpha-sweep --config sweep.toml --seeds 0 1 2 --out results
    noma-tradeoff feasibility --jobs 4
"""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

from .config import get_settings, load_experiment_config
from .controllers import ExperimentRunner
from .exceptions import ConfigurationError, NomaTradeoffError

logger = logging.getLogger(__name__)

COMMANDS: dict[str, tuple[str, Callable[[ExperimentRunner], Path]]] = {
    "alpha-sweep": ("Sweep the trade-off weight", ExperimentRunner.run_alpha_sweep),
    "snr-sweep": ("Sweep the transmit SNR", ExperimentRunner.run_snr_sweep),
    "benchmark": ("Compare against the relaxation benchmark", ExperimentRunner.run_benchmark_table),
    "feasibility": ("Map feasibility over thresholds and SNR", ExperimentRunner.run_feasibility_map),
    "pareto": ("Trace Pareto fronts", ExperimentRunner.run_pareto),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument(
        "--seeds", type=int, nargs="*", default=None, help="Channel seeds (overrides the file)"
    )
    common.add_argument(
        "--seed", type=int, action="append", default=None, help="Single seed; may repeat"
    )
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes")

    parser = argparse.ArgumentParser(
        prog="noma-tradeoff",
        description="SE-EE trade-off beamforming experiments for downlink MISO-NOMA",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, _) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    """Nested configuration overrides from parsed flags."""
    overrides: dict[str, Any] = {}
    seeds = None
    if args.seeds is not None:
        seeds = list(args.seeds)
    if args.seed:
        seeds = (seeds or []) + list(args.seed)
    if seeds is not None:
        overrides["sweep"] = {"seeds": seeds}
    if args.out is not None:
        overrides["output_dir"] = args.out
    return overrides


def main(argv: list[str] | None = None) -> int:
    """
    Run one experiment subcommand.

    Returns:
        0 on success, 2 on configuration errors, 1 on other failures
    """
    args = build_parser().parse_args(argv)

    try:
        settings = get_settings()
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )

    try:
        config = load_experiment_config(args.config, overrides_from(args))
    except ConfigurationError as e:
        logger.error("%s", e)
        return 2

    jobs = args.jobs if args.jobs is not None else settings.jobs
    if jobs < 1:
        logger.error("--jobs must be at least 1")
        return 2

    _, run = COMMANDS[args.command]
    try:
        path = run(ExperimentRunner(config, jobs=jobs))
    except NomaTradeoffError as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
