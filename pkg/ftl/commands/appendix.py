"""
Iterated-Laplacian domination for nonnegative functions.

Without arguments the command runs the three worked examples; ``--poly``
checks one function and ``--corpus`` sweeps generated nonnegative
polynomials.
"""

import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..appendix import corpus_sweep, derivative_bound, derivative_pairs, laplacian_domination
from ..exceptions import CertificationError, ConfigError
from ..parser import parse_expression, to_cpoly
from ..reports import emit
from .common import experiment_config

logger = logging.getLogger("ftl.commands.appendix")

# (label, expression, alpha0, beta0)
WORKED_EXAMPLES: Tuple[Tuple[str, str, Tuple[int, ...], Tuple[int, ...]], ...] = (
    ("modulus", "|z1|^2", (1,), (1,)),
    ("quartic", "|z1|^4", (2,), (2,)),
    ("real_part", "Re(z1)^2", (2,), (0,)),
)


def add_appendix_parser(subparsers):
    """
    Add the appendix command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    appendix_parser = subparsers.add_parser(
        "appendix",
        help="Find the iterated Laplacian dominating a derivative of a nonnegative function"
    )

    appendix_parser.add_argument(
        "--poly",
        help="Nonnegative polynomial, e.g. \"|z1|^4 + Re(z1)^2\""
    )

    appendix_parser.add_argument(
        "--alpha",
        help="Holomorphic multi-index of the derivative, e.g. \"2,0\""
    )

    appendix_parser.add_argument(
        "--beta",
        help="Antiholomorphic multi-index of the derivative"
    )

    appendix_parser.add_argument(
        "--max-order",
        type=int,
        default=4,
        help="Largest derivative order checked when no multi-index is given"
    )

    appendix_parser.add_argument(
        "--corpus",
        type=int,
        default=0,
        help="Sweep this many generated nonnegative polynomials"
    )

    appendix_parser.add_argument(
        "--seed",
        type=int,
        help="Random seed (FTL_SEED overrides)"
    )

    appendix_parser.add_argument(
        "--jobs",
        type=int,
        help="Worker processes (0: all cores)"
    )

    appendix_parser.add_argument(
        "--csv",
        help="Write rows to this CSV file"
    )

    appendix_parser.add_argument(
        "--json",
        help="Write the JSON report to this file"
    )

    appendix_parser.add_argument(
        "--config",
        help="YAML or JSON experiment configuration"
    )


def _multi_index(text: Optional[str], n: int, name: str) -> Tuple[int, ...]:
    if text is None:
        return (0,) * n
    try:
        values = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"Malformed --{name} {text!r}: expected comma-separated integers")
    if len(values) != n or any(v < 0 for v in values):
        raise ConfigError(f"--{name} needs {n} nonnegative entries, got {text!r}")
    return values


def _check(label: str, expression: str, pairs: Sequence[Tuple[Tuple[int, ...], Tuple[int, ...]]], seed: int) -> List[Dict[str, Any]]:
    g = to_cpoly(parse_expression(expression))
    K1 = derivative_bound(g)
    rows = []
    for alpha0, beta0 in pairs:
        result = laplacian_domination(g, alpha0, beta0, K1, seed=seed)
        rows.append({"function": label, "holds": result.holds, **result.to_dict()})
    return rows


def handle_appendix(args):
    """
    Handle the appendix command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    config = experiment_config(args)
    summary: Dict[str, Any] = {}

    if args.corpus > 0:
        report = corpus_sweep(args.corpus, seed=config.seed, jobs=config.jobs)
        rows = report.rows()
        summary.update(report.to_dict())
        violations = report.violations
    else:
        if args.poly:
            g = to_cpoly(parse_expression(args.poly))
            if args.alpha is not None or args.beta is not None:
                pairs = [(_multi_index(args.alpha, g.n, "alpha"), _multi_index(args.beta, g.n, "beta"))]
            else:
                order = min(args.max_order, g.degree)
                pairs = [pair for pair in derivative_pairs(g.n, order) if abs(g.coefficient(*pair)) > 0]
            rows = _check("poly", args.poly, pairs, config.seed)
        else:
            rows = []
            for label, expression, alpha0, beta0 in WORKED_EXAMPLES:
                rows.extend(_check(label, expression, [(alpha0, beta0)], config.seed))
        violations = sum(1 for r in rows if not r["holds"])
        summary["checked"] = len(rows)
        summary["violations"] = violations
        summary["max_constant"] = max((r["constant"] for r in rows), default=0.0)

    label = "generated" if args.corpus > 0 else (args.poly or "worked-examples")
    emit("appendix", label, rows, summary, config.csv, config.json_path, sys.stdout)

    if violations:
        raise CertificationError(f"{violations} derivatives have no dominating iterated Laplacian")
    return 0
