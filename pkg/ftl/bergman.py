"""
Bergman kernel diagonal: the product-of-weights estimate, a quadrature oracle
for Reinhardt rigid domains, star-ball volumes and invariant-metric estimates.

The oracle uses the Laplace representation of the kernel of the rigid model
{Re z_n + P(z') < 0} on the normal axis:

    K(p_δ) = (1/π) ∫_0^∞ t e^{-2tδ} / c_0(t) dt,    c_0(t) = ∫ e^{-2tP(z')} dλ(z'),

which is exact for n = 1 (the half-plane kernel 1/(4πδ²)) and for Reinhardt
P, where only the constant monomial is nonzero at z' = 0.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .algebra import Field
from .domains import Frame, ModelDomain
from .exceptions import OracleError
from .fitting import SlopeFit, linear_fit, loglog_fit
from .parallel import parallel_map
from .weights import FrameProvider, WeightEngine

logger = logging.getLogger("ftl.bergman")

ORACLE_TOLERANCE = 1e-4

# c_0 is tabulated on log t in [log(T_LOW/δ), log(T_HIGH/δ)]; outside, the
# integrand is below the tolerance by many orders.
T_LOW = 1e-4
T_HIGH = 1e4

# Past tδ = EXPONENT_CUTOFF the factor e^{-2tδ} is below e^{-800}.
EXPONENT_CUTOFF = 400.0


def boundary_distance(domain: ModelDomain, p: Sequence[complex]) -> float:
    """δ_Ω(p) = |ρ(p)| (rigid normalization)."""
    return float(abs(domain.defining_value(np.asarray(p, dtype=complex))))


def bergman_estimate(domain: ModelDomain, p: Sequence[complex], provider: FrameProvider) -> float:
    """
    prod_i F(L_i, p, δ_Ω(p)) times δ_Ω(p)^{-2} for the normal slot.

    Raises:
        OracleError: If p is on the boundary
    """
    pts = np.asarray(p, dtype=complex)
    delta = boundary_distance(domain, pts)
    if delta <= 0:
        raise OracleError(f"Point {pts} is on the boundary; the estimate needs an interior point")
    frame = provider(pts, delta)
    f = WeightEngine(frame, pts, provider.M).slot_weights(delta)
    return float(np.prod(f) * delta**-2)


# -- the Reinhardt oracle ---------------------------------------------------------


class ReinhardtOracle:
    """
    Quadrature oracle for K(p_δ, p_δ) with P depending only on |z_1|..|z_{n-1}|.

    c_0(t) is computed by scipy's nquad in polar radii after rescaling each
    radius to the size where its pure term reaches 1/(2t), tabulated on a
    fixed log-t lattice and splined in log-log; the outer t integral is
    mpmath's tanh-sinh rule on log t, split at t = 1/δ.

    Raises:
        OracleError: If P is not Reinhardt or some radius has no pure term
    """

    def __init__(self, domain: ModelDomain, tol: float = ORACLE_TOLERANCE):
        self.domain = domain
        self.tol = tol
        self.m = domain.m
        self.terms: List[Tuple[np.ndarray, float]] = []
        for (alpha, beta), coeff in domain.P:
            if alpha != beta:
                raise OracleError(f"P of {domain.name} is not Reinhardt: term {alpha},{beta}")
            if abs(coeff.imag) > 1e-12:
                raise OracleError(f"P of {domain.name} has a non-real Reinhardt coefficient {coeff}")
            self.terms.append((2 * np.asarray(alpha[: self.m]), float(coeff.real)))
        self.pure: List[Tuple[int, float]] = []
        for i in range(self.m):
            pure = [(int(e[i]), c) for e, c in self.terms if e[i] and not np.delete(e, i).any()]
            pure = [(k, c) for k, c in pure if c > 0]
            if not pure:
                raise OracleError(f"c_0(t) diverges: P has no positive pure term in z_{i + 1}")
            self.pure.append(min(pure))
        self.per_decade = max(6, int(math.ceil(-2 * math.log10(tol))))
        self._lattice: Dict[int, float] = {}
        self._spline: Optional[CubicSpline] = None
        self._range = (0, -1)

    def radial_P(self, r: np.ndarray) -> np.ndarray:
        """P at radii r (..., m)."""
        out = np.zeros(np.shape(r)[:-1])
        for e, c in self.terms:
            out = out + c * np.prod(r**e, axis=-1)
        return out

    def c0(self, t: float) -> float:
        """∫_{C^{n-1}} e^{-2tP} dλ by nquad over rescaled radii."""
        scales = np.array([(2 * t * c) ** (-1.0 / k) for k, c in self.pure])
        jac = float(np.prod(scales**2)) * (2 * np.pi) ** self.m

        def integrand(*u: float) -> float:
            r = scales * np.asarray(u)
            return float(np.exp(-2 * t * self.radial_P(r)) * np.prod(u))

        value, err = integrate.nquad(
            integrand,
            [[0, np.inf]] * self.m,
            opts={"epsabs": 0.0, "epsrel": self.tol / 10, "limit": 200},
        )
        total = value * jac
        if not np.isfinite(total) or total <= 0:
            raise OracleError(f"c_0({t:.3e}) = {total} is not a positive finite number")
        if value > 0 and err / value > self.tol:
            logger.warning(f"c_0({t:.3e}) quadrature error {err / value:.2e} above tolerance {self.tol:.1e}")
        return total

    def _lattice_t(self, k: int) -> float:
        return 10.0 ** (k / self.per_decade)

    def _ensure(self, t_lo: float, t_hi: float) -> None:
        lo = int(math.floor(math.log10(t_lo) * self.per_decade))
        hi = int(math.ceil(math.log10(t_hi) * self.per_decade))
        if self._spline is not None and self._range[0] <= lo and hi <= self._range[1]:
            return
        lo, hi = min(lo, self._range[0]), max(hi, self._range[1])
        for k in range(lo, hi + 1):
            if k not in self._lattice:
                self._lattice[k] = self.c0(self._lattice_t(k))
        ks = np.arange(lo, hi + 1)
        s = np.log(10.0) * ks / self.per_decade
        self._spline = CubicSpline(s, np.log([self._lattice[int(k)] for k in ks]))
        self._range = (lo, hi)
        logger.debug(f"c_0 tabulated on {len(ks)} points, t in [{self._lattice_t(lo):.2e}, {self._lattice_t(hi):.2e}]")

    def log_c0(self, s: float) -> float:
        """log c_0(e^s), extrapolated linearly in log-log outside the table."""
        assert self._spline is not None
        a = math.log(10.0) * self._range[0] / self.per_decade
        b = math.log(10.0) * self._range[1] / self.per_decade
        if s < a:
            return float(self._spline(a) + self._spline(a, 1) * (s - a))
        if s > b:
            return float(self._spline(b) + self._spline(b, 1) * (s - b))
        return float(self._spline(s))

    def kernel(self, delta: float) -> float:
        """K(p_δ, p_δ) at p_δ = -δ on the normal axis."""
        if delta <= 0:
            raise OracleError(f"delta must be positive, got {delta}")
        self._ensure(T_LOW / delta, T_HIGH / delta)

        cutoff = math.log(EXPONENT_CUTOFF / delta)

        def integrand(s: Any) -> Any:
            x = float(s)
            if x > cutoff:
                return mpmath.mpf(0)
            return mpmath.exp(2 * x - 2 * delta * math.exp(x) - self.log_c0(x))

        knee = math.log(1.0 / delta)
        value = mpmath.quad(integrand, [-mpmath.inf, knee, cutoff])
        return float(value) / math.pi


def bergman_oracle_reinhardt(domain: ModelDomain, delta: float, tol: float = ORACLE_TOLERANCE) -> float:
    """K(p_δ, p_δ) for a Reinhardt rigid domain."""
    return ReinhardtOracle(domain, tol).kernel(delta)


# -- star balls and metrics -------------------------------------------------------


@dataclass
class VolumeEstimate:
    value: float
    stderr: float
    samples: int
    polydisc_ratio: float = 1.0


def sphere_samples(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of the unit sphere of C^n."""
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def star_ball_volume(
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    c: float = 1.0,
    samples: int = 4096,
    seed: int = 0,
    M: int = 4,
    engine: Optional[WeightEngine] = None,
) -> VolumeEstimate:
    """
    Vol D(p, δ) for D = {Z : F(L_Z, p, δ) ≤ c²}, L_Z = sum Z_i L_i + Z_n N.

    The normal coefficient only adds |Z_n|² δ^{-2}, so that slice is integrated
    in closed form:

        Vol = (π^n / n!) c^{2n} δ² avg_{S^{2m-1}} F_τ(u)^{-m}.

    The tangent average is sampled on the sphere stretched by F(L_i)^{-1/2}
    (the polydisc of the frame), which is exact when F_τ is diagonal in the
    frame; polydisc_ratio is the remaining average, 1 for such domains.
    """
    engine = engine or WeightEngine(frame, p, M)
    n, m = frame.n, frame.m
    unit = np.pi**n / math.factorial(n) * c ** (2 * n) * delta**2
    if m == 0:
        return VolumeEstimate(float(unit), 0.0, 0)
    scale = engine.slot_weights(delta) ** -0.5
    u = sphere_samples(m, samples, np.random.default_rng(seed)) * scale
    values = engine.weights(u, delta) ** -m
    polydisc = unit * float(np.prod(scale**2))
    err = float(values.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return VolumeEstimate(polydisc * float(values.mean()), polydisc * err, samples, float(values.mean()))


def metric_estimate(
    domain: ModelDomain,
    q: Sequence[complex],
    L: Union[Field, Sequence[complex]],
    provider: FrameProvider,
) -> float:
    """
    F(L_τ, q, δ_Ω(q)) + |a_n| / δ_Ω(q) for L = L_τ + a_n N.

    L is a Field in the span of the frame at q or its n coefficients on the frame.
    """
    pts = np.asarray(q, dtype=complex)
    delta = boundary_distance(domain, pts)
    if delta <= 0:
        raise OracleError(f"Point {pts} is on the boundary")
    frame = provider(pts, delta)
    if isinstance(L, Field):
        holo, _ = L.coefficients_at(pts)
        coeffs = np.linalg.solve(frame.holo_matrix(pts).T, holo)
    else:
        coeffs = np.asarray(L, dtype=complex)
    tangent, a_n = coeffs[: frame.m], coeffs[frame.m]
    f = 0.0
    if np.any(tangent != 0):
        f = float(WeightEngine(frame, pts, provider.M).weights(tangent, delta)[0])
    return f + abs(a_n) / delta


# -- sweeps -----------------------------------------------------------------------


@dataclass
class KernelSweep:
    """Estimate, oracle and star volume over a decreasing δ grid with fitted slopes."""

    domain: str
    deltas: List[float]
    estimate: List[float]
    oracle: List[Optional[float]]
    star_volume: List[float]
    star_stderr: List[float]
    fits: Dict[str, SlopeFit] = field(default_factory=dict)
    flags: Dict[str, Any] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for i, d in enumerate(self.deltas):
            row = {
                "delta": d,
                "estimate": self.estimate[i],
                "oracle": self.oracle[i] if self.oracle[i] is not None else float("nan"),
                "star_volume": self.star_volume[i],
                "star_stderr": self.star_stderr[i],
            }
            row["estimate_over_oracle"] = row["estimate"] / row["oracle"] if self.oracle[i] else float("nan")
            row["kernel_times_volume"] = row["oracle"] * self.star_volume[i] if self.oracle[i] else float("nan")
            out.append(row)
        return out

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["fits"] = {k: v.to_dict() for k, v in self.fits.items()}
        return data


def _sweep_point(
    domain: ModelDomain,
    provider: FrameProvider,
    c: float,
    samples: int,
    seed: int,
    delta: float,
) -> Tuple[float, float, float]:
    p = domain.interior_point(delta)
    frame = provider(p, delta)
    engine = WeightEngine(frame, p, provider.M)
    estimate = float(np.prod(engine.slot_weights(delta)) * delta**-2)
    star = star_ball_volume(frame, p, delta, c, samples, seed, provider.M, engine)
    return estimate, star.value, star.stderr


def kernel_sweep(
    domain: ModelDomain,
    provider: FrameProvider,
    deltas: Sequence[float],
    c: float = 1.0,
    samples: int = 4096,
    seed: int = 0,
    oracle: bool = True,
    tol: float = ORACLE_TOLERANCE,
    jobs: Optional[int] = 1,
) -> KernelSweep:
    """
    Estimate, oracle and star volume at p_δ for every δ, with log-log slopes.

    The oracle is skipped (None) for non-Reinhardt P with a warning.
    """
    grid = sorted((float(d) for d in deltas), reverse=True)
    results = parallel_map(partial(_sweep_point, domain, provider, c, samples, seed), grid, jobs)
    estimates = [r[0] for r in results]
    volumes = [r[1] for r in results]
    errors = [r[2] for r in results]
    kernels: List[Optional[float]] = [None] * len(grid)
    if oracle:
        try:
            engine = ReinhardtOracle(domain, tol)
            kernels = [engine.kernel(d) for d in grid]
        except OracleError as e:
            logger.warning(f"Oracle skipped for {domain.name}: {e}")
    sweep = KernelSweep(domain.name, grid, estimates, kernels, volumes, errors)
    if len(grid) >= 2:
        sweep.fits["estimate"] = loglog_fit(grid, estimates)
        sweep.fits["star_volume"] = loglog_fit(grid, volumes)
        if all(k is not None for k in kernels):
            sweep.fits["oracle"] = loglog_fit(grid, [float(k) for k in kernels if k is not None])
            sweep.flags["slope_gap"] = abs(sweep.fits["estimate"].slope - sweep.fits["oracle"].slope)
    return sweep


# -- the log-factor experiment ----------------------------------------------------

KERNEL_LOG_OVER = "K ~ 1/(delta^3 log(1/delta))"
KERNEL_LOG_TIMES = "K ~ log(1/delta)/delta^3"
KERNEL_INCONCLUSIVE = "inconclusive"

# The linear fit backing a verdict must explain this much of the variance.
MIN_R_SQUARED = 0.99


@dataclass
class LogFactorReport:
    """Which log-factor reading the oracle supports for a kernel growing like δ^{-3}."""

    verdict: str
    log_slope: SlopeFit
    reciprocal_fit: SlopeFit
    direct_fit: SlopeFit
    winner: str
    r_squared: float
    volume_ratio_range: Tuple[float, float]
    rows: List[Dict[str, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "winner": self.winner,
            "r_squared": self.r_squared,
            "log_slope": self.log_slope.to_dict(),
            "reciprocal_fit": self.reciprocal_fit.to_dict(),
            "direct_fit": self.direct_fit.to_dict(),
            "volume_ratio_range": list(self.volume_ratio_range),
            "rows": self.rows,
        }


def log_factor_experiment(sweep: KernelSweep, min_r_squared: float = MIN_R_SQUARED) -> LogFactorReport:
    """
    Decide between K ≍ log(1/δ)/δ³ and K ≍ 1/(δ³ log(1/δ)).

    The sign of the slope of log(Kδ³) against log log(1/δ) picks a reading;
    the reading's own linear fit against log(1/δ) (1/(Kδ³) for the quotient,
    Kδ³ for the product) must reach R² ≥ min_r_squared, otherwise the
    verdict is KERNEL_INCONCLUSIVE. Vol(D)·δ^{-3}/log(1/δ) is reported next
    to Kδ³.

    Raises:
        OracleError: If the sweep has no oracle values
    """
    if any(k is None for k in sweep.oracle):
        raise OracleError("The log-factor experiment needs oracle values")
    d = np.asarray(sweep.deltas)
    k = np.asarray([float(x) for x in sweep.oracle if x is not None])
    logs = np.log(1.0 / d)
    scaled = k * d**3
    log_slope = linear_fit(np.log(logs), np.log(scaled))
    reciprocal = linear_fit(logs, 1.0 / scaled)
    direct = linear_fit(logs, scaled)
    volume = np.asarray(sweep.star_volume) * d**-3 / logs
    rows = [
        {"delta": float(d[i]), "kernel_delta3": float(scaled[i]), "volume_over_delta3_log": float(volume[i])}
        for i in range(len(d))
    ]
    winner, fit = (KERNEL_LOG_OVER, reciprocal) if log_slope.slope < 0 else (KERNEL_LOG_TIMES, direct)
    r_squared = float(fit.r_squared)
    if r_squared >= min_r_squared:
        verdict = winner
    else:
        verdict = KERNEL_INCONCLUSIVE
        logger.warning(f"Best log-factor fit has R^2 {r_squared:.4f} < {min_r_squared}; no verdict")
    logger.info(f"Log-factor slope {log_slope.slope:.3f}, R^2 {r_squared:.4f}: {verdict}")
    return LogFactorReport(
        verdict, log_slope, reciprocal, direct, winner, r_squared, (float(volume.min()), float(volume.max())), rows
    )
