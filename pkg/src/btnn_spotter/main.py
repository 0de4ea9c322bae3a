"""Command-line entry point: btnn <subcommand> [flags]."""

import argparse
import logging
import sys
from typing import List, Optional

from .commands import COMMAND_REGISTRY, get_command
from .config import load_config
from .errors import BtnnError
from .utils.logging import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btnn",
        description="Streaming custom keyword spotting with per-state tail classifiers",
    )
    parser.add_argument(
        "-c",
        "--config",
        help="Path to configuration file (default: $BTNN_CONFIG or ./config/config.yaml)",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command", required=True)
    for name, command_class in COMMAND_REGISTRY.items():
        subparser = subparsers.add_parser(name, help=command_class.help, description=command_class.help)
        command_class.add_arguments(subparser)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on file, format or configuration errors. Usage errors
        exit with status 2 from argparse.
    """
    args = build_parser().parse_args(argv)
    setup_logging(verbose=args.verbose)

    try:
        config = load_config(args.config)
        setup_logging(config["logging"], verbose=args.verbose)
        command = get_command(args.command, config)
        return command.run(args)
    except (BtnnError, OSError) as e:
        logger.error(f"{args.command}: {e}")
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
