"""
Pseudo-distance and homogeneous-space commands.
"""

import logging
import sys
from typing import Any, Dict, List

from ..exceptions import CertificationError
from ..homog import doubling_estimate, engulfing_constant, gamma_search, homog_sweep
from ..reports import emit
from .common import add_experiment_arguments, parse_point, point_label, prepare

logger = logging.getLogger("ftl.commands.homog")


def add_gamma_parser(subparsers):
    """
    Add the gamma command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    gamma_parser = subparsers.add_parser(
        "gamma",
        help="Pseudo-distance gamma(p, q): smallest delta with q in B(p, delta)"
    )

    gamma_parser.add_argument(
        "--p",
        help="First boundary point (default: the origin)"
    )

    gamma_parser.add_argument(
        "--q",
        required=True,
        help="Second point: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    gamma_parser.add_argument(
        "--delta0",
        type=float,
        default=1.0,
        help="Largest delta probed"
    )

    gamma_parser.add_argument(
        "--tol",
        type=float,
        default=1e-3,
        help="Relative tolerance of the bisection"
    )

    add_experiment_arguments(gamma_parser, grid=False)


def handle_gamma(args):
    """
    Handle the gamma command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)
    q = parse_point(domain, args.q)
    result = gamma_search(domain, exp.provider, p, q, exp.config.c, args.delta0, args.tol)
    record = {
        "p": point_label(domain, p),
        "q": point_label(domain, q),
        "c": exp.config.c,
        "frame": exp.config.frame,
        "gamma": result.value,
        "bracket": list(result.bracket),
        "monotone": result.monotone,
        "evaluations": result.evaluations,
    }
    emit("gamma", domain.name, [], record, exp.config.csv, exp.config.json_path, sys.stdout, prefer="json")
    return 0


def add_doubling_parser(subparsers):
    """Add the doubling command to the CLI."""
    doubling_parser = subparsers.add_parser(
        "doubling",
        help="Doubling ratio Vol B(2 delta)/Vol B(delta), engulfing and quasi-metric constants"
    )

    doubling_parser.add_argument(
        "--p",
        help="Center: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    doubling_parser.add_argument(
        "--engulfing",
        type=int,
        default=0,
        help="Also measure the engulfing constant with this many sampled points per delta"
    )

    doubling_parser.add_argument(
        "--sweep",
        action="store_true",
        help="Run the full homogeneous-space sweep (engulfing, doubling, quasi constants)"
    )

    doubling_parser.add_argument(
        "--max-C",
        type=float,
        help="Fail with exit status 2 when a measured constant exceeds this value"
    )

    add_experiment_arguments(doubling_parser)


def handle_doubling(args):
    """Handle the doubling command."""
    exp = prepare(args)
    domain = exp.domain
    config = exp.config
    p = parse_point(domain, args.p)

    summary: Dict[str, Any] = {"p": point_label(domain, p), "c": config.c, "frame": config.frame}
    if args.sweep:
        report = homog_sweep(
            domain, exp.provider, p, exp.deltas, config.c,
            samples=max(args.engulfing, 1), mc_samples=config.samples, seed=config.seed, jobs=config.jobs,
        )
        rows: List[Dict[str, Any]] = report.rows()
        summary.update(
            {
                "engulfing_C": report.engulfing,
                "doubling_C": report.doubling,
                "quasi_triangle": report.quasi_triangle,
                "quasi_symmetry": report.quasi_symmetry,
                "diverged": report.diverged,
            }
        )
        measured = [report.engulfing, report.doubling, report.quasi_triangle, report.quasi_symmetry]
    else:
        rows = []
        for delta in exp.deltas:
            estimate = doubling_estimate(domain, exp.provider, p, float(delta), config.c, config.samples, config.seed)
            row: Dict[str, Any] = {
                "delta": float(delta),
                "doubling_C": estimate.ratio,
                "volume": estimate.small,
                "volume_doubled": estimate.large,
                "relative_error": estimate.relative_error,
            }
            if args.engulfing > 0:
                row["engulfing_C"] = engulfing_constant(
                    domain, exp.provider, p, float(delta), config.c, args.engulfing, seed=config.seed, jobs=config.jobs
                )
            rows.append(row)
        summary["doubling_C"] = max(r["doubling_C"] for r in rows)
        measured = [summary["doubling_C"]] + [r["engulfing_C"] for r in rows if "engulfing_C" in r]

    emit("doubling", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)

    if args.max_C is not None:
        worst = max(measured)
        if not worst <= args.max_C:
            raise CertificationError(f"Measured constant {worst:.6g} exceeds {args.max_C:g}")
    return 0
