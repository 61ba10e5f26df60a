"""
Command-line interface for the finite-type lab.

One subcommand per experiment. Every experiment reads a domain (file or
catalog name), runs on a δ grid and writes CSV rows and a versioned JSON
report. Exit status is 0 on success, 1 on input errors and 2 when a
certificate requested on the command line fails.
"""

import argparse
import logging
import sys
from typing import List, Optional

from .exceptions import CertificationError, FTLError, ParseError

# Import command modules
from .commands.appendix import add_appendix_parser, handle_appendix
from .commands.bergman import (
    add_bergman_parser,
    add_metric_parser,
    add_star_volume_parser,
    handle_bergman,
    handle_metric,
    handle_star_volume,
)
from .commands.catalog import add_catalog_parser, add_parse_parser, handle_catalog, handle_parse
from .commands.coords import add_ball_parser, add_coords_parser, handle_ball, handle_coords
from .commands.homog import add_doubling_parser, add_gamma_parser, handle_doubling, handle_gamma
from .commands.localize import add_localize_parser, handle_localize
from .commands.psh import add_psh_build_parser, add_psh_verify_parser, handle_psh_build, handle_psh_verify
from .commands.weights import (
    add_balpha_parser,
    add_eb_check_parser,
    add_herbort_cert_parser,
    add_weights_parser,
    handle_balpha,
    handle_eb_check,
    handle_herbort_cert,
    handle_weights,
)

logger = logging.getLogger("ftl.cli")


def setup_logging(log_file: Optional[str] = None, debug: bool = False) -> None:
    """
    Set up logging for a CLI run.

    Args:
        log_file: Path to a log file (if None, warnings and errors go to stderr)
        debug: Whether to enable debug logging
    """
    level = logging.DEBUG if debug else (logging.INFO if log_file else logging.WARNING)

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        filename=log_file,
        filemode="w" if log_file else "a"
    )

    # Also log to stderr if in debug mode
    if debug and log_file:
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(logging.DEBUG)
        formatter = logging.Formatter("%(levelname)s: %(message)s")
        console.setFormatter(formatter)
        logging.getLogger().addHandler(console)

    if log_file:
        logger.info(f"Logging to {log_file}")
    if debug:
        logger.info("Debug logging enabled")


def create_parser() -> argparse.ArgumentParser:
    """
    Create the command-line argument parser.

    Returns:
        An ArgumentParser object
    """
    parser = argparse.ArgumentParser(
        description="Finite-type lab: weights, extremal bases, pseudo-balls and Bergman asymptotics",
        prog="ftl"
    )

    parser.add_argument("--version", action="store_true", help="Show version information")

    parser.add_argument(
        "--log-file",
        help="Write the log to this file"
    )

    parser.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug logging"
    )

    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    add_weights_parser(subparsers)
    add_eb_check_parser(subparsers)
    add_balpha_parser(subparsers)
    add_herbort_cert_parser(subparsers)
    add_coords_parser(subparsers)
    add_ball_parser(subparsers)
    add_gamma_parser(subparsers)
    add_doubling_parser(subparsers)
    add_bergman_parser(subparsers)
    add_star_volume_parser(subparsers)
    add_metric_parser(subparsers)
    add_psh_build_parser(subparsers)
    add_psh_verify_parser(subparsers)
    add_localize_parser(subparsers)
    add_appendix_parser(subparsers)
    add_catalog_parser(subparsers)
    add_parse_parser(subparsers)

    return parser


def main(args: Optional[List[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Args:
        args: Command-line arguments (if None, uses sys.argv)

    Returns:
        Exit code (0 for success, 1 for input errors, 2 for failed certificates)
    """
    parser = create_parser()
    try:
        parsed_args = parser.parse_args(args)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is reserved for certificates here
        return 0 if e.code in (0, None) else 1

    if parsed_args.version:
        from . import __version__
        print(f"ftl version {__version__}")
        return 0

    if not parsed_args.command:
        parser.print_help()
        return 1

    setup_logging(parsed_args.log_file, parsed_args.debug)

    try:
        if parsed_args.command == "weights":
            return handle_weights(parsed_args)
        elif parsed_args.command == "eb-check":
            return handle_eb_check(parsed_args)
        elif parsed_args.command == "balpha":
            return handle_balpha(parsed_args)
        elif parsed_args.command == "herbort-cert":
            return handle_herbort_cert(parsed_args)
        elif parsed_args.command == "coords":
            return handle_coords(parsed_args)
        elif parsed_args.command == "ball":
            return handle_ball(parsed_args)
        elif parsed_args.command == "gamma":
            return handle_gamma(parsed_args)
        elif parsed_args.command == "doubling":
            return handle_doubling(parsed_args)
        elif parsed_args.command == "bergman":
            return handle_bergman(parsed_args)
        elif parsed_args.command == "star-volume":
            return handle_star_volume(parsed_args)
        elif parsed_args.command == "metric":
            return handle_metric(parsed_args)
        elif parsed_args.command == "psh-build":
            return handle_psh_build(parsed_args)
        elif parsed_args.command == "psh-verify":
            return handle_psh_verify(parsed_args)
        elif parsed_args.command == "localize":
            return handle_localize(parsed_args)
        elif parsed_args.command == "appendix":
            return handle_appendix(parsed_args)
        elif parsed_args.command == "catalog":
            return handle_catalog(parsed_args)
        elif parsed_args.command == "parse":
            return handle_parse(parsed_args)
        else:
            print(f"Unknown command: {parsed_args.command}", file=sys.stderr)
            return 1
    except CertificationError as e:
        print(f"Certification failed: {e}", file=sys.stderr)
        return 2
    except ParseError as e:
        print(f"Error: {e}", file=sys.stderr)
        caret = e.caret()
        if caret:
            print(caret, file=sys.stderr)
        return 1
    except (FTLError, FileNotFoundError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"Unexpected failure in {parsed_args.command}")
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
