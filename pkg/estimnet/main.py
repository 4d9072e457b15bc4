"""
Main Entry Point - EstimNet command line
"""
from typing import List, Optional
import argparse
import logging
import logging.config
import os
import sys

from estimnet.commands import diagnostics, estimate, simulate, validate
from estimnet.config import ExitCode, build_logging_config, settings
from estimnet.exceptions import EstimationFailedError, EstimNetError

logger = logging.getLogger(__name__)

INPUT_ERRORS = (ValueError, OSError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="estimnet",
        description="ERGM estimation for large directed networks by Equilibrium Expectation",
    )
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level (default: %(default)s)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (estimate, simulate, validate, diagnostics):
        command.register(subparsers)
    return parser


def setup_logging(level: str) -> None:
    os.makedirs(settings.LOG_DIR, exist_ok=True)
    logging.config.dictConfig(build_logging_config(settings.LOG_DIR, level.upper()))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION}: {args.command}")
    try:
        return args.handler(args)
    except EstimationFailedError as e:
        logger.warning(f"{args.command} failed: {e}")
        return ExitCode.NOT_CONVERGED
    except INPUT_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        return ExitCode.INPUT_ERROR
    except EstimNetError as e:
        logger.error(f"{args.command}: {e}", exc_info=True)
        return ExitCode.INPUT_ERROR
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {str(e)}", exc_info=True)
        return ExitCode.INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
