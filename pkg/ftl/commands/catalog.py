"""
CLI commands for the shipped domain catalog and the domain expression grammar.
"""

import json
import sys

from ..catalog import catalog_names, catalog_path
from ..domains import definition_from_file, load_domain
from ..exceptions import DomainError, ParseError
from ..parser import parse_domain, pretty_print, to_cpoly


def add_catalog_parser(subparsers):
    """
    Add the catalog command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    catalog_parser = subparsers.add_parser(
        "catalog",
        help="List or show the shipped model domains"
    )

    catalog_parser.add_argument(
        "name",
        nargs="?",
        help="Domain to show (omit to list every name)"
    )

    catalog_parser.add_argument(
        "--json",
        action="store_true",
        help="Output in JSON format"
    )


def handle_catalog(args):
    """
    Handle the catalog command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    if not args.name:
        names = catalog_names()
        if args.json:
            print(json.dumps(names, indent=2))
        else:
            for name in names:
                print(name)
        return 0

    path = catalog_path(args.name)
    if path is None:
        raise DomainError(f"No catalog entry named {args.name!r}; try one of {', '.join(catalog_names())}")
    definition = definition_from_file(path)
    domain = load_domain(args.name)
    info = definition.to_dict()
    info["levi_check_passed"] = bool(domain.levi_check.passed) if domain.levi_check else None
    if args.json:
        print(json.dumps(info, indent=2, sort_keys=True))
    else:
        for key in ("name", "description", "n", "normal_slot", "P", "M", "window", "levi_check_passed"):
            print(f"{key}: {info[key]}")
    return 0


def add_parse_parser(subparsers):
    """Add the parse command to the CLI."""
    parse_parser = subparsers.add_parser(
        "parse",
        help="Parse a domain expression and print its normal form"
    )

    parse_parser.add_argument(
        "expression",
        help="Expression such as \"Re(z3) + |z1|^2 + |z2|^2\""
    )

    parse_parser.add_argument(
        "--expand",
        action="store_true",
        help="Also print the expanded polynomial"
    )


def handle_parse(args):
    """Handle the parse command; diagnostics carry line, column and a caret."""
    try:
        ast = parse_domain(args.expression)
    except ParseError as e:
        print(f"Error: {e}", file=sys.stderr)
        caret = e.caret()
        if caret:
            print(caret, file=sys.stderr)
        return 1
    print(pretty_print(ast))
    if args.expand:
        print(to_cpoly(ast).pretty())
    return 0
