"""
Commands for the adapted plurisubharmonic function.

``psh-build`` assembles H on the strip {-2δ <= ρ < 0} and exports the
cover, the component schedule and the E1/E2/E3 classification of strip
points; ``psh-verify`` measures the adaptedness constant β.
"""

import logging
import sys
from typing import Any, Dict, List

import numpy as np

from ..algebra.expr import modulus_squared_expr
from ..exceptions import CertificationError
from ..homog import BallFamily
from ..psh import (
    COVER_CAP,
    MAX_COMPONENTS,
    PROFILE_BOUNDS,
    ExprFunction,
    assemble_H,
    classify_points,
    strip_points,
    verify_adapted,
)
from ..reports import emit
from .common import add_experiment_arguments, parse_point, point_label, prepare

logger = logging.getLogger("ftl.commands.psh")


def _add_assembly_arguments(parser):
    parser.add_argument(
        "--p0",
        help="Cover center: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    parser.add_argument(
        "--cap",
        type=int,
        default=COVER_CAP,
        help="Largest number of cover centers"
    )

    parser.add_argument(
        "--max-components",
        type=int,
        default=MAX_COMPONENTS,
        help="Components kept per slot"
    )

    parser.add_argument(
        "--no-safeguard",
        action="store_true",
        help="Do not raise B_const by the Hessian deficit measured on the calibration grid"
    )

    parser.add_argument(
        "--profile",
        choices=sorted(PROFILE_BOUNDS),
        default="quadratic",
        help="Global term g(rho/delta) added to the local pieces"
    )

    parser.add_argument(
        "--strip-points",
        type=int,
        default=24,
        help="Boundary samples pushed into the strip"
    )


def add_psh_build_parser(subparsers):
    """
    Add the psh-build command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    build_parser = subparsers.add_parser(
        "psh-build",
        help="Assemble the adapted plurisubharmonic function on the delta strip"
    )

    _add_assembly_arguments(build_parser)

    build_parser.add_argument(
        "--schedule",
        action="store_true",
        help="Include the component schedule and dominance table in the report"
    )

    add_experiment_arguments(build_parser)


def handle_psh_build(args):
    """
    Handle the psh-build command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    domain = exp.domain
    config = exp.config
    p0 = parse_point(domain, args.p0)

    rows: List[Dict[str, Any]] = []
    details: List[Dict[str, Any]] = []
    for delta in exp.deltas:
        assembly = assemble_H(
            domain, exp.provider, float(delta), config.c, p0, args.cap, args.max_components,
            config.seed, safeguard=not args.no_safeguard, profile=args.profile,
        )
        family = BallFamily(domain, exp.provider, p0, config.c)
        grid = strip_points(domain, family, float(delta), args.strip_points, seed=config.seed)
        lowest = float(np.linalg.eigvalsh(assembly.hessian(grid)).min())
        counts = classify_points(assembly, grid)
        row: Dict[str, Any] = {
            "delta": float(delta),
            "centers": len(assembly.centers),
            "pieces": len(assembly.pieces),
            "A": assembly.A,
            "B_const": assembly.B_const,
            "bound": assembly.bound,
            "min_hessian_eigenvalue": lowest,
            "raw_deficit": assembly.constants.get("raw_deficit"),
            "correction": assembly.correction,
            "C": assembly.constants.get("C"),
            "D": assembly.constants.get("D"),
        }
        for key in ("E1", "E2", "E3"):
            row[key] = sum(c[key] for c in counts)
        rows.append(row)
        if args.schedule:
            details.append(assembly.to_dict())
        else:
            details.append({"delta": float(delta), "notes": list(assembly.notes)})

    summary = {
        "p0": point_label(domain, p0),
        "c": config.c,
        "frame": config.frame,
        "profile": args.profile,
        "min_hessian_eigenvalue": min(r["min_hessian_eigenvalue"] for r in rows),
        "raw_deficit": max(r["raw_deficit"] for r in rows),
        "assemblies": details,
    }
    emit("psh-build", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)
    return 0


def add_psh_verify_parser(subparsers):
    """Add the psh-verify command to the CLI."""
    verify_parser = subparsers.add_parser(
        "psh-verify",
        help="Measure the adaptedness constant beta of the assembled function"
    )

    _add_assembly_arguments(verify_parser)

    verify_parser.add_argument(
        "--directions",
        type=int,
        default=32,
        help="Random unit directions per strip point"
    )

    verify_parser.add_argument(
        "--control",
        action="store_true",
        help="Verify H = |z|^2 instead (expected to fail the Hessian condition)"
    )

    verify_parser.add_argument(
        "--max-beta",
        type=float,
        help="Fail with exit status 2 when beta exceeds this value"
    )

    add_experiment_arguments(verify_parser)


def handle_psh_verify(args):
    """Handle the psh-verify command."""
    exp = prepare(args)
    domain = exp.domain
    config = exp.config
    p0 = parse_point(domain, args.p0)

    rows: List[Dict[str, Any]] = []
    for delta in exp.deltas:
        frame = exp.provider(p0, float(delta))
        family = BallFamily(domain, exp.provider, p0, config.c)
        grid = strip_points(domain, family, float(delta), args.strip_points, seed=config.seed)
        if args.control:
            H = ExprFunction(modulus_squared_expr(domain.n))
        else:
            H = assemble_H(
                domain, exp.provider, float(delta), config.c, p0, args.cap, args.max_components,
                config.seed, safeguard=not args.no_safeguard, profile=args.profile,
            )
        report = verify_adapted(H, domain, frame, float(delta), grid, args.directions, config.seed, exp.M)
        rows.append(
            {
                "delta": float(delta),
                "beta": report.beta,
                "sup_H": report.sup_H,
                "beta_hessian": report.beta_hessian,
                "beta_lists": report.beta_lists,
                "min_eigenvalue": report.min_eigenvalue,
                "raw_min_eigenvalue": report.raw_min_eigenvalue,
                "raw_deficit": report.raw_deficit,
                "grid_points": report.grid_points,
                "failures": len(report.failures),
            }
        )

    betas = [r["beta"] for r in rows]
    summary = {
        "p0": point_label(domain, p0),
        "c": config.c,
        "frame": config.frame,
        "control": bool(args.control),
        "profile": args.profile,
        "raw_deficit": max(r["raw_deficit"] for r in rows),
        "failures": sum(r["failures"] for r in rows),
        "max_beta": max(betas),
        "beta_spread": max(betas) / min(betas) if min(betas) > 0 else float("inf"),
    }
    emit("psh-verify", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)

    failed = [r["delta"] for r in rows if r["failures"]]
    if failed and not args.control:
        raise CertificationError(f"Adaptedness conditions fail at delta {', '.join(f'{d:.3g}' for d in failed)}")
    if args.max_beta is not None and not max(betas) <= args.max_beta:
        raise CertificationError(f"Adaptedness constant {max(betas):.6g} exceeds {args.max_beta:g}")
    return 0
