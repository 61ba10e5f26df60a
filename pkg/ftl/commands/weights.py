"""
Weight and extremality commands.

``weights`` sweeps F(L, p, δ) over a δ grid and fits the log-log slope,
``eb-check`` and ``balpha`` sample the extremality constants of a frame and
``herbort-cert`` runs the two-direction non-separation statistic.
"""

import logging
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from ..domains import sample_boundary
from ..exceptions import CertificationError, ConfigError
from ..fitting import loglog_fit
from ..reports import emit
from ..weights import (
    NOT_SEPARABLE,
    WeightEngine,
    bracket_identity_check,
    check_balpha,
    check_eb1,
    check_eb2,
    separation_certificate,
    strong_extremality,
    weight,
    weight_lower_bound_check,
)
from .common import add_experiment_arguments, parse_complex_list, parse_direction, parse_point, point_label, prepare

logger = logging.getLogger("ftl.commands.weights")

# Slope gaps up to this size get no deviation note.
SLOPE_GAP_NOTE = 0.05
EB1_GROWTH_TARGET = 50.0


def add_weights_parser(subparsers):
    """
    Add the weights command to the CLI.

    Args:
        subparsers: Subparsers object from the main parser
    """
    weights_parser = subparsers.add_parser(
        "weights",
        help="Sweep the weight F(L, p, delta) over a delta grid"
    )

    weights_parser.add_argument(
        "--dir",
        dest="direction",
        default="e1",
        help="Tangent direction on the frame, e.g. \"e2+e3\" (normalized)"
    )

    weights_parser.add_argument(
        "--p",
        help="Base point: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    weights_parser.add_argument(
        "--no-normalize",
        action="store_true",
        help="Use the direction's coefficients as given"
    )

    weights_parser.add_argument(
        "--lower-bound",
        action="store_true",
        help="Also report every slot weight against its diagonal lower bound"
    )

    add_experiment_arguments(weights_parser)


def handle_weights(args):
    """
    Handle the weights command.

    Args:
        args: Parsed command-line arguments

    Returns:
        Exit code (0 for success, non-zero for errors)
    """
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)
    direction = parse_direction(domain, args.direction, normalize=not args.no_normalize)

    rows: List[Dict[str, Any]] = []
    last = None
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        report = weight(direction, frame, p, float(delta), exp.M)
        rows.append(
            {
                "delta": float(delta),
                "F": report.value,
                "F_times_delta": report.value * float(delta),
                "dominant": report.dominant.label(["L"]) if report.dominant else "",
            }
        )
        last = report

    summary: Dict[str, Any] = {
        "direction": args.direction,
        "p": point_label(domain, p),
        "M": exp.M,
        "frame": exp.config.frame,
    }
    if len(rows) >= 2:
        summary["fit"] = loglog_fit([r["delta"] for r in rows], [r["F"] for r in rows]).to_dict()
    if last is not None:
        summary["leading_exponent"] = last.leading_exponent
        summary["profile"] = last.to_dict()["profile"]
    if args.lower_bound:
        summary["lower_bound"] = weight_lower_bound_check(exp.provider.canonical, p, exp.deltas, exp.M)

    emit("weights", domain.name, rows, summary, exp.config.csv, exp.config.json_path, sys.stdout)
    return 0


def add_eb_check_parser(subparsers):
    """Add the eb-check command to the CLI."""
    eb_parser = subparsers.add_parser(
        "eb-check",
        help="Sample the EB1/EB2 extremality constants of a frame"
    )

    eb_parser.add_argument(
        "--p",
        help="Base point: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    eb_parser.add_argument(
        "--depth",
        type=int,
        help="Bracket depth of the EB2 check (default: M - 2)"
    )

    eb_parser.add_argument(
        "--max-K",
        type=float,
        help="Fail with exit status 2 when a sampled constant exceeds this value"
    )

    eb_parser.add_argument(
        "--strong",
        action="store_true",
        help="Combine EB1, EB2 and B(alpha) into a strong-extremality verdict"
    )

    eb_parser.add_argument(
        "--identity-points",
        type=int,
        default=0,
        help="Also check the bracket identity for Levi entries at this many boundary points"
    )

    eb_parser.add_argument(
        "--growth-target",
        type=float,
        default=EB1_GROWTH_TARGET,
        help="EB1 size whose delta is extrapolated from the fitted growth when the grid stays below it"
    )

    add_experiment_arguments(eb_parser)


def handle_eb_check(args):
    """Handle the eb-check command."""
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)
    config = exp.config

    rows: List[Dict[str, Any]] = []
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        engine = WeightEngine(frame, p, exp.M)
        eb1 = check_eb1(frame, p, float(delta), exp.M, config.samples, config.seed, engine=engine)
        eb2 = check_eb2(frame, p, float(delta), exp.M, args.depth, engine=engine)
        rows.append(
            {
                "delta": float(delta),
                "K_est_EB1": eb1.value,
                "K_est_EB2": eb2.value,
                "witness_EB1": eb1.witness,
                "witness_EB2": eb2.witness,
                "degenerate_slots": " ".join(str(s + 1) for s in eb1.degenerate_slots),
            }
        )

    summary: Dict[str, Any] = {
        "p": point_label(domain, p),
        "frame": config.frame,
        "M": exp.M,
        "max_K_EB1": max(r["K_est_EB1"] for r in rows),
        "max_K_EB2": max(r["K_est_EB2"] for r in rows),
        "note": "sampled constants are lower bounds for the true constants",
    }
    summary.update(eb1_growth(rows, args.growth_target))
    if args.strong:
        strong = strong_extremality(exp.provider(p, exp.delta), p, exp.deltas, exp.M, samples=config.samples)
        summary["strong_verdict"] = strong.verdict
        summary["alpha_fit"] = strong.alpha_fit.to_dict() if strong.alpha_fit else None
    if args.identity_points > 0:
        pts = sample_boundary(domain, args.identity_points, np.random.default_rng(config.seed))
        summary["bracket_identity_defect"] = bracket_identity_check(exp.provider.canonical, pts)

    emit("eb-check", domain.name, rows, summary, config.csv, config.json_path, sys.stdout)

    if args.max_K is not None:
        worst = max(summary["max_K_EB1"], summary["max_K_EB2"])
        if not worst <= args.max_K:
            raise CertificationError(f"Sampled extremality constant {worst:.6g} exceeds {args.max_K:g}")
    return 0


def eb1_growth(rows: List[Dict[str, Any]], target: float) -> Dict[str, Any]:
    """Log-log fit of the sampled EB1 constant and, below `target`, where the fit reaches it."""
    points = [(r["delta"], r["K_est_EB1"]) for r in rows if math.isfinite(r["K_est_EB1"]) and r["K_est_EB1"] > 0]
    if len(points) < 2:
        return {}
    fit = loglog_fit([d for d, _ in points], [k for _, k in points])
    out: Dict[str, Any] = {"eb1_fit": fit.to_dict()}
    largest = max(k for _, k in points)
    # a flat EB1 (an extremal frame) has nothing to extrapolate
    if largest >= target or not fit.slope < -SLOPE_GAP_NOTE:
        return out
    reach = math.exp((math.log(target) - fit.intercept) / fit.slope)
    out["eb1_target_delta"] = reach
    out["deviation"] = (
        f"sampled EB1 stays below {target:g} on the grid (max {largest:.3g}); "
        f"it grows like delta^{fit.slope:.3f} and reaches {target:g} near delta {reach:.2e}"
    )
    return out


def separation_deviation(fit_slope: float, deep_slope: float, exponent: float) -> Optional[str]:
    """Note when the grid slope misses the leading exponent of the statistic."""
    gap = fit_slope - exponent
    if not abs(gap) > SLOPE_GAP_NOTE:
        return None
    return (
        f"grid slope {fit_slope:.3f} misses the leading exponent {exponent:.3f} by {gap:+.3f}; "
        f"a subleading delta power still dominates there (deep-grid slope {deep_slope:.3f})"
    )


def add_balpha_parser(subparsers):
    """Add the balpha command to the CLI."""
    balpha_parser = subparsers.add_parser(
        "balpha",
        help="Sample the B(alpha) constant of a frame over a delta grid"
    )

    balpha_parser.add_argument(
        "--p",
        help="Base point: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    balpha_parser.add_argument(
        "--require-decreasing",
        action="store_true",
        help="Fail with exit status 2 unless alpha decreases with delta"
    )

    add_experiment_arguments(balpha_parser)


def handle_balpha(args):
    """Handle the balpha command."""
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)

    rows = []
    for delta in exp.deltas:
        frame = exp.provider(p, float(delta))
        cert = check_balpha(frame, p, float(delta), exp.M)
        rows.append({"delta": float(delta), "alpha_est": cert.value, "witness": cert.witness})

    alphas = np.asarray([r["alpha_est"] for r in rows])
    grid = np.asarray([r["delta"] for r in rows])
    positive = alphas > 0
    summary: Dict[str, Any] = {"p": point_label(domain, p), "frame": exp.config.frame, "M": exp.M}
    fit = None
    if positive.sum() >= 2:
        fit = loglog_fit(grid[positive], alphas[positive])
        summary["fit"] = fit.to_dict()
    # grid is decreasing, so alpha decreasing in delta means non-decreasing along the rows
    monotone = bool(np.all(np.diff(alphas) >= -1e-12 * np.maximum(1.0, np.abs(alphas[:-1]))))
    summary["decreasing_in_delta"] = monotone

    emit("balpha", domain.name, rows, summary, exp.config.csv, exp.config.json_path, sys.stdout)

    if args.require_decreasing and not monotone:
        raise CertificationError("alpha_est does not decrease with delta on the grid")
    return 0


def add_herbort_cert_parser(subparsers):
    """Add the herbort-cert command to the CLI."""
    cert_parser = subparsers.add_parser(
        "herbort-cert",
        help="Two-direction non-separation statistic of a three-dimensional domain"
    )

    cert_parser.add_argument(
        "--p",
        help="Base point: n coordinates, or n-1 tangential ones lifted to the boundary"
    )

    cert_parser.add_argument(
        "--K",
        default="1,10,100",
        help="Comma-separated separation constants to test"
    )

    cert_parser.add_argument(
        "--assert",
        dest="expect",
        choices=["separable", "not-separable"],
        help="Fail with exit status 2 when a verdict contradicts this"
    )

    add_experiment_arguments(cert_parser)


def handle_herbort_cert(args):
    """Handle the herbort-cert command."""
    exp = prepare(args)
    domain = exp.domain
    p = parse_point(domain, args.p)
    try:
        constants = [float(k.real) for k in parse_complex_list(args.K)]
    except ConfigError:
        raise ConfigError(f"Malformed --K list {args.K!r}")
    if not constants:
        raise ConfigError("--K needs at least one constant")

    frame = exp.provider(p, exp.delta)
    reports = [separation_certificate(domain, p, exp.deltas, K, frame) for K in constants]
    rows = reports[0].rows()
    summary: Dict[str, Any] = {
        "p": point_label(domain, p),
        "verdicts": [r.to_dict() for r in reports],
        "exponent": reports[0].exponent,
        "fit": reports[0].fit.to_dict(),
        "deep_fit": reports[0].deep_fit.to_dict(),
    }
    deviation = separation_deviation(reports[0].fit.slope, reports[0].deep_fit.slope, reports[0].exponent)
    if deviation:
        summary["deviation"] = deviation

    emit("herbort-cert", domain.name, rows, summary, exp.config.csv, exp.config.json_path, sys.stdout)

    if args.expect == "separable":
        blocked = [r.K for r in reports if r.verdict == NOT_SEPARABLE]
        if blocked:
            raise CertificationError(f"{domain.name} is not separable at K = {', '.join(f'{k:g}' for k in blocked)}")
    elif args.expect == "not-separable":
        clear = [r.K for r in reports if r.verdict != NOT_SEPARABLE]
        if clear:
            raise CertificationError(f"No obstruction found on {domain.name} at K = {', '.join(f'{k:g}' for k in clear)}")
    return 0
