"""
Localization command: bump the domain, rebuild extremal frames on the new
boundary piece and compare the weights on both sides of the projection.
"""

import logging
import sys
from typing import Any, Dict, List

import numpy as np

from ..exceptions import CertificationError
from ..localization import (
    DEFAULT_D,
    build_local_frame,
    levi_min_eigenvalue,
    lift_field,
    localized_weight_check,
    project_field,
    project_to_boundary,
    radial_transversality,
    sample_new_boundary,
    select_bump,
)
from ..reports import emit
from ..weights import check_eb1, orthonormalize
from .common import add_experiment_arguments, prepare

logger = logging.getLogger("ftl.commands.localize")


def add_localize_parser(subparsers):
    """
    Add the localize command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    localize_parser = subparsers.add_parser(
        "localize",
        help="Bump the domain near a boundary point and re-certify frames on the new piece"
    )

    localize_parser.add_argument(
        "--d",
        type=float,
        default=DEFAULT_D,
        help="Distance from the bump center to the boundary"
    )

    localize_parser.add_argument(
        "--points",
        type=int,
        default=4,
        help="Boundary points of the bumped domain to examine"
    )

    localize_parser.add_argument(
        "--directions",
        type=int,
        default=8,
        help="Random directions of the weight comparison"
    )

    localize_parser.add_argument(
        "--max-ratio",
        type=float,
        help="Fail with exit status 2 when the two-sided weight ratio exceeds this value"
    )

    add_experiment_arguments(localize_parser)


def _roundtrip(ld, p: np.ndarray, vector: np.ndarray) -> float:
    moved = project_field(ld, p, vector)
    back = lift_field(ld, p, moved.rho)
    return float(np.linalg.norm(back.tilde - moved.tilde) / max(1.0, np.linalg.norm(moved.tilde)))


def handle_localize(args):
    """
    Handle the localize command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    config = exp.config
    ld = select_bump(exp.domain, args.d, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    points = sample_new_boundary(ld, args.points, rng)

    rows: List[Dict[str, Any]] = []
    for k, p in enumerate(points):
        q = project_to_boundary(ld, p)
        for delta in exp.deltas:
            omega = orthonormalize(exp.provider(q, float(delta)), q, float(delta), exp.M)
            local = build_local_frame(ld, p, float(delta), omega, exp.M, seed=config.seed)
            check = localized_weight_check(ld, p, float(delta), local, exp.M, args.directions, config.seed)
            eb1 = check_eb1(local.frame, p, float(delta), exp.M, config.samples, config.seed)
            roundtrip = max(_roundtrip(ld, p, v) for v in local.lifted)
            rows.append(
                {
                    "point": k,
                    "delta": float(delta),
                    "distance_to_base": float(np.linalg.norm(p - q)),
                    "max_ratio": check.max_ratio,
                    "normal_ratio": check.normal_ratio,
                    "K_est_EB1": eb1.value,
                    "K_prime": local.K_prime,
                    "spread": local.spread,
                    "choices": "".join(local.choices),
                    "roundtrip": roundtrip,
                }
            )

    summary = {
        "base": exp.domain.name,
        "mu": ld.mu,
        "k0": ld.k0,
        "k0_threshold": ld.k0_threshold,
        "attempts": [list(a) for a in ld.attempts],
        "d": ld.d,
        "min_levi_eigenvalue": float(levi_min_eigenvalue(ld.r, points).min()),
        "radial_transversality": radial_transversality(ld, seed=config.seed),
        "max_ratio": max(r["max_ratio"] for r in rows),
        "max_roundtrip": max(r["roundtrip"] for r in rows),
    }
    emit("localize", ld.name, rows, summary, config.csv, config.json_path, sys.stdout)

    if args.max_ratio is not None and not summary["max_ratio"] <= args.max_ratio:
        raise CertificationError(f"Localized weight ratio {summary['max_ratio']:.6g} exceeds {args.max_ratio:g}")
    return 0
