"""Command-line entry point.

Usage:
    python3 -m nonmarkov_rb.cli.main asf --config configs/two_spin_reference.json
    python3 -m nonmarkov_rb.cli.main simulate --config configs/two_spin_reference.json --seed 7 --threads 4
    python3 -m nonmarkov_rb.cli.main memory-scan --config configs/finite_memory_scan.json --out results/scan
    python3 -m nonmarkov_rb.cli.main coherence --config configs/coherence_two_spin.json --verbose

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

from nonmarkov_rb.cli.commands import COMMANDS
from nonmarkov_rb.cli.experiment import load_config
from nonmarkov_rb.config import Config
from nonmarkov_rb.exceptions import ConfigError, NonMarkovRBError, NumericalError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _threads_from_env() -> int:
    raw = os.environ.get("NMRB_THREADS")
    if raw is None:
        return Config.THREADS
    try:
        threads = int(raw)
    except ValueError as exc:
        raise ConfigError(f"NMRB_THREADS must be an integer, got {raw!r}", "NMRB_THREADS") from exc
    if threads < 1:
        raise ConfigError(f"NMRB_THREADS must be at least 1, got {threads}", "NMRB_THREADS")
    return threads


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nmrb", description="Non-Markovian randomized benchmarking")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=f"Run the {name} command")
        sub.add_argument("--config", required=True, metavar="PATH", help="Experiment JSON config.")
        sub.add_argument("--seed", type=int, default=None, help="Override the config's RNG seed.")
        sub.add_argument("--out", default=None, metavar="DIR", help="Output directory (default: output.path).")
        sub.add_argument(
            "--threads", type=int, default=None,
            help="Worker processes for Monte-Carlo sampling (default: $NMRB_THREADS or 1).",
        )
        sub.add_argument("--verbose", action="store_true", help="Debug logging and progress bars.")
    return parser


def run(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run the command, and return the exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s  %(levelname)-8s  %(name)s — %(message)s",
        datefmt="%H:%M:%S",
    )

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        threads = args.threads if args.threads is not None else _threads_from_env()
        if threads < 1:
            raise ConfigError(f"must be at least 1, got {threads}", "--threads")
        out_dir = Path(args.out or cfg.output.path)
        logger.info(f"{args.command}: model={cfg.model.name} seed={cfg.run.seed} hash={cfg.content_hash()[:12]}")
        COMMANDS[args.command](cfg, out_dir, threads, args.verbose)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERIC
    except (NonMarkovRBError, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
