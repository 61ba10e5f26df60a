"""
Pseudo-distance and homogeneous-space diagnostics.

γ(p, q) is the smallest δ with q in the pseudo-ball B^c(p, δ) built from the
frame the provider returns at (p, δ). Engulfing, doubling, quasi-symmetry and
quasi-triangle constants are estimated on samples; nothing here proves a
bound, every constant is measured.
"""

import logging
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coords import PolyMap, PseudoBall, adapted_coords, ball_radii, ball_volume, sample_ball
from .domains import ModelDomain, lift_to_boundary
from .exceptions import FrameError
from .parallel import parallel_map, spawn_seeds
from .weights import FrameProvider, WeightEngine

logger = logging.getLogger("ftl.homog")

GAMMA_PROBES = 32
GAMMA_DEPTH = 1e-16
ENGULFING_GRID = tuple(2.0 ** (k / 4.0) for k in range(25))


class BallFamily:
    """
    B^c(p, δ) for varying δ at a fixed center.

    Charts and weight engines are cached per frame, so a δ scan with a fixed
    frame builds the adapted chart once.
    """

    def __init__(self, domain: ModelDomain, provider: FrameProvider, p: Sequence[complex], c: float, M: Optional[int] = None):
        self.domain = domain
        self.provider = provider
        self.p = np.asarray(p, dtype=complex)
        self.c = c
        self.M = M or provider.M
        self._charts: Dict[int, Tuple[PolyMap, WeightEngine]] = {}

    def _chart(self, delta: float) -> Tuple[Any, PolyMap, WeightEngine]:
        frame = self.provider(self.p, delta)
        key = id(frame)
        if key not in self._charts:
            chart = adapted_coords(frame, self.domain, self.p, delta, self.M, measure=False)
            self._charts[key] = (chart, WeightEngine(frame, self.p, self.M))
        chart, engine = self._charts[key]
        return frame, chart, engine

    def ball(self, delta: float) -> PseudoBall:
        frame, chart, engine = self._chart(delta)
        f = engine.slot_weights(delta)
        if np.any(f <= 0):
            raise FrameError(f"Zero weight at {self.p} in slots {np.flatnonzero(f <= 0).tolist()}")
        return PseudoBall("polydisc_pullback", self.p, delta, self.c, ball_radii(f, delta, self.c), chart, frame)

    def contains(self, q: np.ndarray, delta: float) -> np.ndarray:
        ball = self.ball(delta)
        return np.all(np.abs(ball.chart.apply(q)) < ball.radii, axis=-1)


@dataclass
class GammaResult:
    value: float
    bracket: Tuple[float, float]
    monotone: bool
    evaluations: int


def gamma_search(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    q: Sequence[complex],
    c: float = 0.5,
    delta0: float = 1.0,
    tol: float = 1e-3,
    probes: int = GAMMA_PROBES,
    family: Optional[BallFamily] = None,
) -> GammaResult:
    """
    Smallest δ <= δ0 with q in B^c(p, δ).

    A decreasing scan of log-spaced probes locates the smallest admissible
    probe; the bracket below it is refined by log-bisection until the
    endpoints agree to the relative tolerance. A failed probe above an
    admissible one marks the result non-monotone.

    Returns:
        The result with value 0 for q = p and inf when q is outside B^c(p, δ0)
    """
    pts = np.asarray(p, dtype=complex)
    target = np.asarray(q, dtype=complex)
    if np.allclose(pts, target, rtol=0.0, atol=0.0):
        return GammaResult(0.0, (0.0, 0.0), True, 0)
    family = family or BallFamily(domain, provider, pts, c)
    deltas = np.geomspace(delta0, delta0 * GAMMA_DEPTH, probes)
    inside = [bool(family.contains(target, d)) for d in deltas]
    count = len(deltas)
    if not inside[0]:
        return GammaResult(float("inf"), (delta0, float("inf")), True, count)
    last = max(i for i, ok in enumerate(inside) if ok)
    monotone = all(inside[: last + 1])
    if not monotone:
        logger.warning(f"Non-monotone membership for gamma({pts}, {target}); keeping the smallest admissible probe")
    if last == count - 1:
        logger.warning(f"q is inside every probe ball down to {deltas[-1]:.3e}")
        return GammaResult(float(deltas[-1]), (0.0, float(deltas[-1])), monotone, count)
    lo, hi = float(deltas[last + 1]), float(deltas[last])
    while hi / lo > 1.0 + tol:
        mid = float(np.sqrt(lo * hi))
        count += 1
        if family.contains(target, mid):
            hi = mid
        else:
            lo = mid
    return GammaResult(hi, (lo, hi), monotone, count)


def gamma(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    q: Sequence[complex],
    c: float = 0.5,
    delta0: float = 1.0,
    tol: float = 1e-3,
) -> float:
    """Pseudo-distance γ(p, q) on the polydisc-pullback ball family."""
    return gamma_search(domain, provider, p, q, c, delta0, tol).value


def _engulfing_one(
    domain: ModelDomain,
    provider: FrameProvider,
    outer: BallFamily,
    delta: float,
    c: float,
    inner_samples: int,
    item: Tuple[np.ndarray, np.random.SeedSequence],
) -> float:
    q, seed = item
    inner = BallFamily(domain, provider, q, c, outer.M)
    pts = sample_ball(inner.ball(delta), inner_samples, np.random.default_rng(seed))
    for C in ENGULFING_GRID:
        if np.all(outer.contains(pts, C * delta)):
            return C
    return float("inf")


def engulfing_constant(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    delta: float,
    c: float = 0.5,
    samples: int = 16,
    inner_samples: int = 128,
    seed: int = 0,
    points: Optional[np.ndarray] = None,
    jobs: Optional[int] = 1,
) -> float:
    """
    Smallest C on the grid 2^{k/4} in [1, 64] with B(q, δ) ⊂ B(p, Cδ), maxed over q.

    The centers q are sampled from B(p, δ) and lifted to the boundary unless
    `points` is given; inf means no grid value worked.
    """
    pts = np.asarray(p, dtype=complex)
    outer = BallFamily(domain, provider, pts, c)
    rng = np.random.default_rng(seed)
    if points is None:
        raw = lift_to_boundary(domain, sample_ball(outer.ball(delta), 4 * samples, rng))
        centers = raw[outer.contains(raw, delta)][:samples]
        centers = np.vstack([pts[None, :], centers])
    else:
        centers = np.atleast_2d(np.asarray(points, dtype=complex))
    seeds = spawn_seeds(seed, len(centers))
    work = partial(_engulfing_one, domain, provider, outer, delta, c, inner_samples)
    values = parallel_map(work, list(zip(centers, seeds)), jobs)
    worst = max(values)
    logger.debug(f"Engulfing at delta={delta:.3e}: C={worst} over {len(centers)} centers")
    return worst


@dataclass
class DoublingEstimate:
    ratio: float
    small: float
    large: float
    relative_error: float


def doubling_estimate(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    delta: float,
    c: float = 0.5,
    samples: int = 4096,
    seed: int = 0,
) -> DoublingEstimate:
    """Vol(B(p, 2δ)) / Vol(B(p, δ)); the frames at δ and 2δ come from the provider."""
    family = BallFamily(domain, provider, p, c)
    small = ball_volume(family.ball(delta), samples, seed, domain.window)
    large = ball_volume(family.ball(2 * delta), samples, seed, domain.window)
    if small.value <= 0:
        return DoublingEstimate(float("inf"), small.value, large.value, float("inf"))
    err = float(np.hypot(small.relative_error, large.relative_error))
    return DoublingEstimate(large.value / small.value, small.value, large.value, err)


def doubling_constant(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    delta: float,
    c: float = 0.5,
    samples: int = 4096,
    seed: int = 0,
) -> float:
    return doubling_estimate(domain, provider, p, delta, c, samples, seed).ratio


def _gamma_pair(domain: ModelDomain, provider: FrameProvider, c: float, delta0: float, pair: Tuple[np.ndarray, np.ndarray]) -> float:
    return gamma(domain, provider, pair[0], pair[1], c, delta0)


def gamma_table(
    domain: ModelDomain,
    provider: FrameProvider,
    points: np.ndarray,
    c: float = 0.5,
    delta0: float = 1.0,
    jobs: Optional[int] = 1,
) -> Dict[Tuple[int, int], float]:
    """γ(points[i], points[j]) for every ordered pair i != j."""
    pts = np.asarray(points, dtype=complex)
    pairs = [(i, j) for i in range(len(pts)) for j in range(len(pts)) if i != j]
    values = parallel_map(partial(_gamma_pair, domain, provider, c, delta0), [(pts[i], pts[j]) for i, j in pairs], jobs)
    return dict(zip(pairs, values))


def quasi_symmetry(table: Dict[Tuple[int, int], float]) -> float:
    """max over pairs of γ(p, q) / γ(q, p); pairs with a zero or infinite side are skipped."""
    worst = 1.0
    for (i, j), forward in table.items():
        backward = table[(j, i)]
        if forward > 0 and backward > 0 and np.isfinite(forward) and np.isfinite(backward):
            worst = max(worst, forward / backward)
    return worst


def quasi_triangle(table: Dict[Tuple[int, int], float]) -> float:
    """max over ordered triples (p, q, r) of γ(p, r) / (γ(p, q) + γ(q, r))."""
    idx = sorted({i for i, _ in table})
    worst = 1.0
    for i in idx:
        for j in idx:
            for k in idx:
                if len({i, j, k}) < 3:
                    continue
                denom = table[(i, j)] + table[(j, k)]
                if denom > 0 and np.isfinite(denom) and np.isfinite(table[(i, k)]):
                    worst = max(worst, table[(i, k)] / denom)
    return worst


@dataclass
class HomogReport:
    """Measured homogeneous-space constants over a δ grid."""

    engulfing: float
    doubling: float
    quasi_triangle: float
    quasi_symmetry: float
    samples: int
    deltas: List[float]
    provenance: str
    ball_family: str = "polydisc_pullback"
    diverged: List[str] = field(default_factory=list)
    per_delta: List[Dict[str, float]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        return list(self.per_delta)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def homog_sweep(
    domain: ModelDomain,
    provider: FrameProvider,
    p: Sequence[complex],
    deltas: Sequence[float],
    c: float = 0.5,
    samples: int = 8,
    mc_samples: int = 4096,
    seed: int = 0,
    jobs: Optional[int] = 1,
) -> HomogReport:
    """
    Engulfing and doubling per δ, quasi constants over boundary points near p.

    Constants are maxima over the grid; an infinite value is recorded in
    `diverged` rather than raised.
    """
    pts = np.asarray(p, dtype=complex)
    per_delta: List[Dict[str, float]] = []
    diverged: List[str] = []
    for delta in deltas:
        engulf = engulfing_constant(domain, provider, pts, float(delta), c, samples, seed=seed, jobs=jobs)
        double = doubling_estimate(domain, provider, pts, float(delta), c, mc_samples, seed)
        per_delta.append(
            {
                "delta": float(delta),
                "engulfing_C": engulf,
                "doubling_C": double.ratio,
                "doubling_rel_err": double.relative_error,
            }
        )
        if not np.isfinite(engulf):
            diverged.append(f"engulfing at delta={delta:.3e}")
        if not np.isfinite(double.ratio):
            diverged.append(f"doubling at delta={delta:.3e}")
        logger.info(f"delta={delta:.3e}: engulfing {engulf:.4g}, doubling {double.ratio:.4g}")
    rng = np.random.default_rng(seed)
    family = BallFamily(domain, provider, pts, c)
    largest = float(max(deltas))
    nearby = lift_to_boundary(domain, sample_ball(family.ball(largest), 3, rng))
    points = np.vstack([pts[None, :], nearby])
    table = gamma_table(domain, provider, points, c, delta0=1.0, jobs=jobs)
    symmetry = quasi_symmetry(table)
    triangle = quasi_triangle(table)
    return HomogReport(
        engulfing=max(r["engulfing_C"] for r in per_delta),
        doubling=max(r["doubling_C"] for r in per_delta),
        quasi_triangle=triangle,
        quasi_symmetry=symmetry,
        samples=samples,
        deltas=[float(d) for d in deltas],
        provenance=provider.kind,
        diverged=diverged,
        per_delta=per_delta,
    )
