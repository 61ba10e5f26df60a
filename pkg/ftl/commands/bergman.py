"""
Bergman kernel, star-ball volume and metric commands.
"""

import logging
import math
import sys
from typing import Any, Dict

import numpy as np

from ..bergman import (
    KERNEL_INCONCLUSIVE,
    ORACLE_TOLERANCE,
    kernel_sweep,
    log_factor_experiment,
    metric_estimate,
    star_ball_volume,
)
from ..exceptions import CertificationError, ConfigError
from ..fitting import loglog_fit
from ..reports import emit
from ..weights import WeightEngine
from .common import add_experiment_arguments, parse_complex_list, parse_point, point_label, prepare

logger = logging.getLogger("ftl.commands.bergman")


def add_bergman_parser(subparsers):
    """
    Add the bergman command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    bergman_parser = subparsers.add_parser(
        "bergman",
        help="Bergman kernel estimate against the Reinhardt oracle along the normal axis"
    )

    bergman_parser.add_argument(
        "--sweep",
        dest="delta",
        help="Same as --delta: log-spaced grid min:max:count"
    )

    bergman_parser.add_argument(
        "--no-oracle",
        action="store_true",
        help="Skip the quadrature oracle"
    )

    bergman_parser.add_argument(
        "--tol",
        type=float,
        default=ORACLE_TOLERANCE,
        help="Relative tolerance of the oracle quadrature"
    )

    bergman_parser.add_argument(
        "--log-factor",
        action="store_true",
        help="Decide the log-factor reading of a kernel growing like delta^-3"
    )

    bergman_parser.add_argument(
        "--max-slope-gap",
        type=float,
        help="Fail with exit status 2 when estimate and oracle slopes differ by more than this"
    )

    add_experiment_arguments(bergman_parser)


def handle_bergman(args):
    """
    Handle the bergman command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    config = exp.config
    sweep = kernel_sweep(
        exp.domain, exp.provider, exp.deltas, config.c, config.samples, config.seed,
        oracle=not args.no_oracle, tol=args.tol, jobs=config.jobs,
    )
    summary: Dict[str, Any] = {
        "frame": config.frame,
        "c": config.c,
        "fits": {k: v.to_dict() for k, v in sweep.fits.items()},
        "flags": dict(sweep.flags),
    }
    report = log_factor_experiment(sweep) if args.log_factor else None
    if report is not None:
        summary["log_factor"] = report.to_dict()

    emit("bergman", exp.domain.name, sweep.rows(), summary, config.csv, config.json_path, sys.stdout)

    if args.max_slope_gap is not None:
        gap = sweep.flags.get("slope_gap")
        if gap is None:
            raise ConfigError("--max-slope-gap needs oracle values on a grid of at least two points")
        if not gap <= args.max_slope_gap:
            raise CertificationError(f"Estimate and oracle slopes differ by {gap:.4g} > {args.max_slope_gap:g}")
    if report is not None and report.verdict == KERNEL_INCONCLUSIVE:
        raise CertificationError(f"Log-factor experiment is inconclusive: best fit R^2 {report.r_squared:.4f}")
    return 0


def add_star_volume_parser(subparsers):
    """Add the star-volume command to the CLI."""
    star_parser = subparsers.add_parser(
        "star-volume",
        help="Monte-Carlo volume of the star-shaped ball D(p, delta)"
    )

    star_parser.add_argument(
        "--p",
        help="Center: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    add_experiment_arguments(star_parser)


def handle_star_volume(args):
    """Handle the star-volume command."""
    exp = prepare(args)
    domain = exp.domain
    config = exp.config
    p = parse_point(domain, args.p)
    n = domain.n

    rows = []
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        engine = WeightEngine(frame, p, exp.M)
        volume = star_ball_volume(frame, p, float(delta), config.c, config.samples, config.seed, exp.M, engine)
        weights = np.append(engine.slot_weights(float(delta)), float(delta) ** -2)
        row: Dict[str, Any] = {
            "delta": float(delta),
            "volume": volume.value,
            "stderr": volume.stderr,
            "polydisc_ratio": volume.polydisc_ratio,
        }
        # the isotropic closed form applies when every direction has the same weight
        if np.allclose(weights, weights[0], rtol=1e-12, atol=0.0):
            exact = math.pi**n * config.c ** (2 * n) * float(weights[0]) ** -n / math.factorial(n)
            row["isotropic_exact"] = exact
            row["z_score"] = (volume.value - exact) / volume.stderr if volume.stderr > 0 else 0.0
        rows.append(row)

    summary: Dict[str, Any] = {"p": point_label(domain, p), "c": config.c, "frame": config.frame, "M": exp.M}
    if len(rows) >= 2:
        summary["fit"] = loglog_fit([r["delta"] for r in rows], [r["volume"] for r in rows]).to_dict()

    emit("star-volume", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)
    return 0


def add_metric_parser(subparsers):
    """Add the metric command to the CLI."""
    metric_parser = subparsers.add_parser(
        "metric",
        help="Weight-based estimate F(L_T, q, d(q)) + |a_n|/d(q) of the Bergman metric"
    )

    metric_parser.add_argument(
        "--q",
        required=True,
        help="Interior point, n coordinates in file order"
    )

    metric_parser.add_argument(
        "--vec",
        required=True,
        help="Coefficients of L on the frame: n-1 tangent slots then the normal"
    )

    add_experiment_arguments(metric_parser, grid=False)


def handle_metric(args):
    """Handle the metric command."""
    exp = prepare(args)
    domain = exp.domain
    q = parse_point(domain, args.q, on_boundary=False)
    coeffs = parse_complex_list(args.vec)
    if coeffs.size != domain.n:
        raise ConfigError(f"--vec needs {domain.n} coefficients, got {coeffs.size}")
    value = metric_estimate(domain, q, coeffs, exp.provider)
    record = {
        "q": point_label(domain, q),
        "vector": [str(complex(z)) for z in coeffs],
        "frame": exp.config.frame,
        "distance": float(abs(domain.defining_value(q))),
        "metric_estimate": value,
    }
    emit("metric", domain.name, [], record, exp.config.csv, exp.config.json_path, sys.stdout, prefer="json")
    return 0
