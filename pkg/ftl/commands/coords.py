"""
Adapted-coordinate and pseudo-ball commands.
"""

import logging
import sys
from typing import Any, Dict, List

import numpy as np

from ..coords import (
    adapted_coords,
    ball_equivalence_check,
    ball_membership,
    ball_volume,
    c0_search,
    control_lists_check,
    finite_type_floor,
    make_ball,
)
from ..fitting import loglog_fit
from ..reports import emit
from .common import add_experiment_arguments, parse_point, point_label, prepare

logger = logging.getLogger("ftl.commands.coords")


def add_coords_parser(subparsers):
    """
    Add the coords command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    coords_parser = subparsers.add_parser(
        "coords",
        help="Build adapted coordinates and report their measured conditions"
    )

    coords_parser.add_argument(
        "--p",
        help="Boundary point: n coordinates, or n-1 tangential ones"
    )

    coords_parser.add_argument(
        "--c0",
        action="store_true",
        help="Also search the largest admissible ball scale c0 at the largest delta"
    )

    add_experiment_arguments(coords_parser)


def handle_coords(args):
    """
    Handle the coords command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)

    rows: List[Dict[str, Any]] = []
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        chart = adapted_coords(frame, domain, p, float(delta), exp.M)
        row: Dict[str, Any] = {"delta": float(delta), "degree": chart.degree}
        row.update({k: (float("nan") if v is None else v) for k, v in chart.checks.items()})
        rows.append(row)

    floor, per_delta = finite_type_floor(exp.provider(p, exp.delta), p, exp.deltas, exp.M)
    for row, value in zip(rows, per_delta):
        row["finite_type_floor"] = value
    summary: Dict[str, Any] = {
        "p": point_label(domain, p),
        "frame": exp.config.frame,
        "M": exp.M,
        "finite_type_floor": floor,
        "max_pure_residual": max(r["pure_residual"] for r in rows),
        "max_K_prime": max(r["K_prime"] for r in rows),
    }
    if args.c0:
        summary["c0"] = c0_search(domain, exp.provider(p, exp.delta), p, exp.delta, exp.config.samples, exp.config.seed)

    emit("coords", domain.name, rows, summary, exp.config.csv, exp.config.json_path, sys.stdout)
    return 0


def add_ball_parser(subparsers):
    """Add the ball command to the CLI."""
    ball_parser = subparsers.add_parser(
        "ball",
        help="Pseudo-ball radii, volume, control-list ratios and exp-ball comparison"
    )

    ball_parser.add_argument(
        "--p",
        help="Center: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    ball_parser.add_argument(
        "--q",
        action="append",
        default=[],
        help="Test membership of this point (repeatable)"
    )

    ball_parser.add_argument(
        "--exp",
        action="store_true",
        help="Compare with the exponential-map ball"
    )

    ball_parser.add_argument(
        "--frozen",
        action="store_true",
        help="Freeze the field coefficients at the center for the exponential map"
    )

    ball_parser.add_argument(
        "--control",
        type=int,
        default=0,
        help="Sample this many ball points for the control-list ratio check"
    )

    add_experiment_arguments(ball_parser)


def handle_ball(args):
    """Handle the ball command."""
    exp = prepare(args)
    domain = exp.domain
    config = exp.config
    p = parse_point(domain, args.p)
    queries = [parse_point(domain, q, on_boundary=False) for q in args.q]

    rows: List[Dict[str, Any]] = []
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        ball = make_ball(frame, domain, p, float(delta), config.c, exp.M)
        volume = ball_volume(ball, config.samples, config.seed)
        row: Dict[str, Any] = {"delta": float(delta)}
        for i, r in enumerate(ball.radii):
            row[f"radius_{i + 1}"] = float(r)
        row["volume"] = volume.value
        row["volume_stderr"] = volume.stderr
        if args.exp:
            eq = ball_equivalence_check(ball, min(config.samples, 256), config.seed, frozen=args.frozen)
            row["exp_alpha"] = eq.alpha
            row["exp_beta"] = eq.beta
            row["exp_residual"] = eq.max_residual
        if args.control > 0:
            ratios = control_lists_check(frame, ball, exp.M, args.control, config.seed)
            row["control_max_ratio"] = ratios["max_ratio"]
            row["control_max_inverse_ratio"] = ratios["max_inverse_ratio"]
        for k, q in enumerate(queries):
            row[f"contains_q{k + 1}"] = bool(ball_membership(q, ball))
        rows.append(row)

    summary = {
        "p": point_label(domain, p),
        "c": config.c,
        "frame": config.frame,
        "M": exp.M,
    }
    if len(rows) >= 2:
        volumes = np.asarray([r["volume"] for r in rows])
        if np.all(volumes > 0):
            summary["volume_fit"] = loglog_fit([r["delta"] for r in rows], volumes).to_dict()

    emit("ball", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)
    return 0
