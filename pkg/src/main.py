"""
NICD Lab - Main entry point
Exact evaluation of non-interactive correlation distillation protocols on trees
"""

import sys
import os

# Lets the module run as a plain script as well as with -m.
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

import json
import logging
from typing import List, Optional

from src import __version__
from src.cli import RunConfig, build_parser, run
from src.core.errors import NicdLabError
from src.core.settings import LabSettings

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_ERROR = 3


def setup_logging(level: int = logging.INFO, log_file: Optional[str] = None):
    """Configure logging for the application; reports own standard output"""
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode='w'))
    logging.basicConfig(level=level, format=log_format, handlers=handlers, force=True)


def _log_level(args, settings: LabSettings) -> int:
    if args.verbose:
        return logging.DEBUG
    if args.quiet:
        return logging.WARNING
    name = str(settings.get("log_level", "INFO")).upper()
    return getattr(logging, name, logging.INFO)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main application entry point

    Returns:
        0 on success, 1 when a verification check fails, 2 on a usage error
        and 3 on a domain or precondition error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    settings = LabSettings(args.settings)
    setup_logging(_log_level(args, settings), settings.get("log_file"))
    logger = logging.getLogger(__name__)
    logger.info(f"Starting NICD Lab v{__version__}")

    try:
        config = RunConfig.from_args(args, settings)
        exit_code = run(config)
    except NicdLabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return EXIT_ERROR

    logger.info(f"Finished with exit code {exit_code}")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
