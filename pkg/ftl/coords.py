"""
Adapted polynomial coordinates and pseudo-balls.

An adapted chart at a boundary point p is translation to p, the linear map
sending the frame at p to the coordinate fields, and a holomorphic shear
w_n = ζ_n + h(ζ') that removes every pure tangential Taylor term of ρ up
to degree 2M. Its inverse is again polynomial and is computed exactly.

Pseudo-balls are pullbacks of polydiscs with radii c F_i^{-1/2} (c δ in the
normal slot) or images of the exponential map of the frame.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import CPoly, Poly, apply_field
from .domains import Frame, ModelDomain
from .exceptions import ExpFlowError, FrameError
from .weights import WeightEngine

logger = logging.getLogger("ftl.coords")

DEFAULT_STEPS = 64
C0_CAP = 0.5


@dataclass
class PolyMap:
    """
    Polynomial chart centered at p with an exact polynomial inverse.

    `checks` holds the measured conditions of the construction: pure
    tangential residual, coefficient bound, the derivative bound constant and
    the triangularity defect of the field coefficients.
    """

    forward: List[CPoly]
    inverse: List[CPoly]
    center: np.ndarray
    degree: int
    shear: Optional[CPoly] = None
    rho_adapted: Optional[CPoly] = None
    checks: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def identity(cls, n: int, center: Optional[Sequence[complex]] = None) -> "PolyMap":
        c = np.zeros(n, dtype=complex) if center is None else np.asarray(center, dtype=complex)
        forward = [CPoly.variable(n, k) - complex(c[k]) for k in range(n)]
        inverse = [CPoly.variable(n, k) + complex(c[k]) for k in range(n)]
        return cls(forward, inverse, c, 1)

    @classmethod
    def linear(cls, matrix: np.ndarray, center: Optional[Sequence[complex]] = None) -> "PolyMap":
        """Chart w = matrix (z - center)."""
        a = np.asarray(matrix, dtype=complex)
        n = a.shape[0]
        c = np.zeros(n, dtype=complex) if center is None else np.asarray(center, dtype=complex)
        b = np.linalg.inv(a)
        forward = [_linear_form(a[i], -a[i] @ c) for i in range(n)]
        inverse = [_linear_form(b[i], c[i]) for i in range(n)]
        return cls(forward, inverse, c, 1)

    @property
    def n(self) -> int:
        return len(self.forward)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        return np.stack([np.broadcast_to(c.evaluate(pts), pts.shape[:-1]) for c in self.forward], axis=-1)

    def pull(self, coords: np.ndarray) -> np.ndarray:
        w = np.asarray(coords, dtype=complex)
        return np.stack([np.broadcast_to(c.evaluate(w), w.shape[:-1]) for c in self.inverse], axis=-1)

    def inverse_jacobian(self, coords: np.ndarray) -> np.ndarray:
        """Complex Jacobian dz/dw of the (holomorphic) inverse at coords; shape (..., n, n)."""
        w = np.asarray(coords, dtype=complex)
        rows = []
        for comp in self.inverse:
            rows.append(np.stack([np.broadcast_to(comp.derive(j).evaluate(w), w.shape[:-1]) for j in range(self.n)], axis=-1))
        return np.stack(rows, axis=-2)

    def coefficient_bound(self) -> float:
        values = [abs(c) for comp in self.forward + self.inverse for _, c in comp]
        return max(values, default=0.0)


def _linear_form(row: np.ndarray, offset: complex) -> CPoly:
    n = len(row)
    out = CPoly.constant(n, complex(offset))
    for k in range(n):
        if row[k] != 0:
            out = out + CPoly.variable(n, k) * complex(row[k])
    return out


def _factorial(multi: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in multi)


def adapted_coords(
    frame: Frame,
    domain: ModelDomain,
    p: Sequence[complex],
    delta: float,
    M: Optional[int] = None,
    measure: bool = True,
) -> PolyMap:
    """
    Adapted chart at a boundary point.

    The shear is found by fixed-point iteration h <- h + G / b_n, where G is
    the holomorphic part of ρ in the current chart restricted to w_n = 0 and
    b_n = |∂ρ(p)|; each pass removes the lowest remaining degree.

    Args:
        frame: Frame tangent to the domain
        domain: Rigid model domain
        p: Boundary point
        delta: Scale used for the measured derivative bound
        M: List bound (defaults to the domain's)
        measure: Compute the diagnostic conditions into `checks`

    Returns:
        The chart with its measured conditions in `checks`

    Raises:
        FrameError: If the frame is singular at p
    """
    M = M or domain.M
    n = domain.n
    pts = np.asarray(p, dtype=complex)
    top = 2 * M
    v = frame.holo_matrix(pts)
    det = abs(np.linalg.det(v))
    if det < 1e-12:
        raise FrameError(f"Frame is singular at {pts}: |det| = {det:.3e}")
    w_mat = np.linalg.inv(v.T)
    zeta = [_linear_form(w_mat[i], -w_mat[i] @ pts) for i in range(n)]
    lin_inverse = [_linear_form(v[:, k], pts[k]) for k in range(n)]
    rho_t = domain.rho_poly.compose(lin_inverse)
    unit = tuple(1 if k == n - 1 else 0 for k in range(n))
    b_n = rho_t.coefficient(unit, (0,) * n)
    holo = rho_t.holomorphic_part()
    variables = [CPoly.variable(n, k) for k in range(n)]
    h = CPoly.zero(n)
    for _ in range(top + 1):
        g = holo.compose(variables[:-1] + [-h], max_degree=top)
        g = CPoly(n, {key: c for key, c in g.terms.items() if sum(key[0]) >= 2})
        if not g.terms or max(abs(c) for _, c in g) < 1e-15:
            break
        h = h + g / b_n
    shear_z = h.compose(zeta)
    forward = zeta[:-1] + [zeta[-1] + shear_z]
    zeta_w = variables[:-1] + [variables[-1] - h]
    inverse = [CPoly.constant(n, complex(pts[k])) + sum_linear(v[:, k], zeta_w) for k in range(n)]
    rho_hat = domain.rho_poly.compose(inverse, max_degree=top)
    chart = PolyMap(forward, inverse, pts, max(1, h.degree), shear=h, rho_adapted=rho_hat)
    if not measure:
        return chart
    f = WeightEngine(frame, pts, M).slot_weights(delta)
    chart.checks = {
        "pure_residual": pure_residual(rho_hat, top),
        "coefficient_bound": chart.coefficient_bound(),
        "K_prime": derivative_bound_constant(rho_hat, f, delta, top),
        "triangularity": triangularity_defect(frame, chart, M),
        "normal_derivative": float(abs(b_n)),
        "roundtrip": roundtrip_residual(chart, ball_radii(f, delta, 1.0)),
    }
    logger.debug(f"Adapted chart at {pts}: {chart.checks}")
    return chart


def sum_linear(coeffs: np.ndarray, polys: Sequence[CPoly]) -> CPoly:
    out = CPoly.zero(polys[0].n)
    for c, poly in zip(coeffs, polys):
        if c != 0:
            out = out + poly * complex(c)
    return out


def roundtrip_residual(chart: PolyMap, radii: np.ndarray, samples: int = 64, seed: int = 0) -> float:
    """max |forward(inverse(w)) - w| over samples of the polydisc with the given radii."""
    w = sample_polydisc(np.minimum(radii, 1.0), samples, np.random.default_rng(seed))
    return float(np.max(np.abs(chart.apply(chart.pull(w)) - w)))


def pure_residual(rho_hat: CPoly, top: int) -> float:
    """max |∂^α ρ̂(0)| over pure tangential (holomorphic or antiholomorphic) α with |α| <= top."""
    n = rho_hat.n
    zero = (0,) * n
    worst = 0.0
    for (alpha, beta), c in rho_hat:
        for pure, other in ((alpha, beta), (beta, alpha)):
            if other == zero and pure[n - 1] == 0 and 1 <= sum(pure) <= top:
                worst = max(worst, abs(c) * _factorial(pure))
    return worst


def derivative_bound_constant(rho_hat: CPoly, slot_weights: np.ndarray, delta: float, top: int) -> float:
    """K' = max |D^{αβ} ρ̂(0)| / min(δ F^{(α+β)/2}, 1) over mixed tangential derivatives."""
    n = rho_hat.n
    worst = 0.0
    for (alpha, beta), c in rho_hat:
        if alpha[n - 1] or beta[n - 1] or not any(alpha) or not any(beta) or sum(alpha) + sum(beta) > top:
            continue
        value = abs(c) * _factorial(alpha) * _factorial(beta)
        weight = np.prod([slot_weights[i] ** ((alpha[i] + beta[i]) / 2.0) for i in range(n - 1)])
        bound = min(delta * weight, 1.0)
        worst = max(worst, value / bound if bound > 0 else float("inf"))
    return float(worst)


def triangularity_defect(frame: Frame, chart: PolyMap, M: int) -> Optional[float]:
    """
    Largest derivative ∂^α (L_i w_j)(0) in adapted coordinates over j < i < n, α ≠ 0
    supported on slots j+1..i with |α| <= M. None when the frame is not polynomial.
    """
    n = chart.n
    worst = 0.0
    for i in range(n - 1):
        for j in range(i):
            value = apply_field(frame.tangent[i], Poly(chart.forward[j]))
            if not isinstance(value, Poly):
                return None
            local = value.poly.compose(chart.inverse, max_degree=M)
            for (alpha, beta), c in local:
                if any(beta) or not any(alpha) or sum(alpha) > M:
                    continue
                if all(alpha[s] == 0 for s in range(n) if not j < s <= i):
                    worst = max(worst, abs(c) * _factorial(alpha))
    return worst


# -- pseudo-balls -----------------------------------------------------------------


@dataclass
class PseudoBall:
    """Polydisc pullback B^c(p, δ) or exponential ball with radii c F_i^{-1/2}."""

    kind: str
    center: np.ndarray
    delta: float
    c: float
    radii: np.ndarray
    chart: PolyMap
    frame: Optional[Frame] = None

    def scaled(self, factor: float) -> "PseudoBall":
        return PseudoBall(self.kind, self.center, self.delta, self.c * factor, self.radii * factor, self.chart, self.frame)


def ball_radii(slot_weights: np.ndarray, delta: float, c: float) -> np.ndarray:
    return np.concatenate([c / np.sqrt(slot_weights), [c * delta]])


def make_ball(
    frame: Frame,
    domain: ModelDomain,
    p: Sequence[complex],
    delta: float,
    c: float,
    M: Optional[int] = None,
    kind: str = "polydisc_pullback",
    chart: Optional[PolyMap] = None,
) -> PseudoBall:
    """
    Build B^c(p, δ) on the adapted chart at p.

    Raises:
        FrameError: If some tangent weight vanishes (infinite radius)
    """
    M = M or domain.M
    pts = np.asarray(p, dtype=complex)
    f = WeightEngine(frame, pts, M).slot_weights(delta)
    if np.any(f <= 0):
        raise FrameError(f"Zero weight in slots {np.flatnonzero(f <= 0).tolist()}; the ball is unbounded")
    chart = chart or adapted_coords(frame, domain, pts, delta, M)
    return PseudoBall(kind, pts, delta, c, ball_radii(f, delta, c), chart, frame)


def ball_membership(q: np.ndarray, ball: PseudoBall) -> np.ndarray:
    """True iff every coordinate is strictly inside its disc; vectorized over points."""
    if ball.kind == "exp":
        if ball.frame is None:
            raise FrameError("Exponential balls need their frame")
        u, _ = exp_coordinates(ball.frame, ball.center, np.atleast_2d(q))
        w = u[:, : len(ball.radii)] + 1j * u[:, len(ball.radii) :]
        inside = np.all(np.abs(w) < ball.radii, axis=-1)
        return inside if np.ndim(q) > 1 else inside[0]
    coords = ball.chart.apply(q)
    return np.all(np.abs(coords) < ball.radii, axis=-1)


def sample_polydisc(radii: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples of the polydisc with the given radii."""
    n = len(radii)
    r = np.sqrt(rng.random((count, n))) * radii
    theta = rng.uniform(0, 2 * np.pi, (count, n))
    return r * np.exp(1j * theta)


def sample_ball(ball: PseudoBall, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points of B^c(p, δ): uniform polydisc samples mapped through the chart inverse."""
    return ball.chart.pull(sample_polydisc(ball.radii, count, rng))


# -- exponential map ----------------------------------------------------------------


def _exp_velocity(frame: Frame, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bik->bk", w, frame.holo_matrix(z))


def exp_flow(
    frame: Frame,
    p: Sequence[complex],
    u: np.ndarray,
    steps: int = DEFAULT_STEPS,
    frozen: bool = False,
    window: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Endpoints of the unit-time flow of sum u_i Y_i from p, with error estimates.

    Y_i = 2 Re L_i and Y_{i+n} = 2 Re(√-1 L_i), so the flow solves
    dz/dt = sum_i (u_i + √-1 u_{i+n}) L_i(z) in holomorphic coordinates
    (slot n uses N). RK4 with `steps` steps; the error is the distance to
    the half-step-count solution.

    Raises:
        ExpFlowError: If the flow leaves the window
    """
    pts = np.asarray(p, dtype=complex)
    n = frame.n
    batch = np.atleast_2d(np.asarray(u, dtype=float))
    w = batch[:, :n] + 1j * batch[:, n:]
    if frozen:
        end = pts + w @ frame.holo_matrix(pts)
        return end, np.zeros(len(end))

    def integrate(count: int) -> np.ndarray:
        z = np.broadcast_to(pts, w.shape).copy()
        dt = 1.0 / count
        for _ in range(count):
            k1 = _exp_velocity(frame, z, w)
            k2 = _exp_velocity(frame, z + 0.5 * dt * k1, w)
            k3 = _exp_velocity(frame, z + 0.5 * dt * k2, w)
            k4 = _exp_velocity(frame, z + dt * k3, w)
            z = z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if window is not None and np.any(np.linalg.norm(z, axis=-1) > window):
                raise ExpFlowError(f"Exponential flow from {pts} left the window |z| <= {window}")
        return z

    fine = integrate(steps)
    coarse = integrate(max(1, steps // 2))
    return fine, np.linalg.norm(fine - coarse, axis=-1)


def exp_ball_point(
    frame: Frame,
    p: Sequence[complex],
    u: Sequence[float],
    steps: int = DEFAULT_STEPS,
    frozen: bool = False,
    window: Optional[float] = None,
) -> np.ndarray:
    """Endpoint of the exponential map at p for 2n real coordinates u."""
    end, _ = exp_flow(frame, p, np.asarray(u, dtype=float)[None, :], steps, frozen, window)
    return end[0]


def exp_coordinates(
    frame: Frame,
    p: Sequence[complex],
    targets: np.ndarray,
    steps: int = DEFAULT_STEPS,
    frozen: bool = False,
    iterations: int = 25,
    tol: float = 1e-12,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Invert the exponential map by batched Newton shooting.

    The initial guess solves the frozen (linear) problem; the Jacobian is
    taken by forward differences.

    Returns:
        (u, residual) with u of shape (B, 2n)
    """
    pts = np.asarray(p, dtype=complex)
    goal = np.atleast_2d(np.asarray(targets, dtype=complex))
    n = frame.n
    v = frame.holo_matrix(pts)
    w0 = np.linalg.solve(v.T, (goal - pts).T).T
    u = np.concatenate([w0.real, w0.imag], axis=1)
    if frozen:
        return u, np.zeros(len(u))

    def residual(x: np.ndarray) -> np.ndarray:
        end, _ = exp_flow(frame, pts, x, steps)
        diff = end - goal
        return np.concatenate([diff.real, diff.imag], axis=1)

    r = residual(u)
    for _ in range(iterations):
        norm = np.linalg.norm(r, axis=1)
        if np.all(norm < tol):
            break
        eps = 1e-7 * np.maximum(1.0, np.abs(u).max(axis=1, keepdims=True))
        jac = np.zeros((len(u), 2 * n, 2 * n))
        for k in range(2 * n):
            shifted = u.copy()
            shifted[:, k] += eps[:, 0]
            jac[:, :, k] = (residual(shifted) - r) / eps
        u = u - np.linalg.solve(jac, r[..., None])[..., 0]
        r = residual(u)
    return u, np.linalg.norm(r, axis=1)


# -- ball comparisons and volumes ---------------------------------------------------


@dataclass
class EquivalenceReport:
    alpha: float
    beta: float
    samples: int
    max_residual: float


def _exp_samples(radii: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    w = sample_polydisc(radii, count, rng)
    return np.concatenate([w.real, w.imag], axis=1)


def ball_equivalence_check(
    ball: PseudoBall,
    samples: int = 256,
    seed: int = 0,
    frozen: bool = False,
    steps: int = DEFAULT_STEPS,
) -> EquivalenceReport:
    """
    Largest α with B_exp^{αc} ⊂ B^c and smallest β with B^c ⊂ B_exp^{βc}, on samples.

    The exponential ball of scale c uses |u_i + √-1 u_{i+n}| < c F_i^{-1/2}.
    """
    if ball.frame is None:
        raise FrameError("Ball equivalence needs the ball's frame")
    rng = np.random.default_rng(seed)
    base = _exp_samples(ball.radii, samples, rng)

    def inside(scale: float) -> bool:
        ends, _ = exp_flow(ball.frame, ball.center, base * scale, steps, frozen)
        return bool(np.all(np.max(np.abs(ball.chart.apply(ends)) / ball.radii, axis=-1) < 1.0))

    lo, hi = np.log(1 / 64), np.log(64.0)
    if not inside(np.exp(lo)):
        alpha = float(np.exp(lo))
    elif inside(np.exp(hi)):
        alpha = float(np.exp(hi))
    else:
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if inside(np.exp(mid)):
                lo = mid
            else:
                hi = mid
        alpha = float(np.exp(lo))
    points = sample_ball(ball, samples, rng)
    u, res = exp_coordinates(ball.frame, ball.center, points, steps, frozen)
    n = len(ball.radii)
    w = u[:, :n] + 1j * u[:, n:]
    beta = float(np.max(np.abs(w) / ball.radii))
    return EquivalenceReport(alpha, beta, samples, float(res.max(initial=0.0)))


@dataclass
class VolumeEstimate:
    value: float
    stderr: float
    samples: int

    @property
    def relative_error(self) -> float:
        return self.stderr / self.value if self.value > 0 else float("inf")


def ball_volume(ball: PseudoBall, samples: int = 4096, seed: int = 0, window: Optional[float] = None) -> VolumeEstimate:
    """
    Monte-Carlo volume of Φ^{-1}(Δ_c), optionally cut to the window.

    The chart inverse is holomorphic, so the real Jacobian is |det dz/dw|^2.
    """
    if ball.kind != "polydisc_pullback":
        raise FrameError("Volumes are computed for polydisc pullbacks")
    rng = np.random.default_rng(seed)
    w = sample_polydisc(ball.radii, samples, rng)
    jac = np.abs(np.linalg.det(ball.chart.inverse_jacobian(w))) ** 2
    if window is not None:
        jac = jac * (np.linalg.norm(ball.chart.pull(w), axis=-1) <= window)
    box = float(np.prod(np.pi * ball.radii**2))
    mean = float(jac.mean())
    err = float(jac.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return VolumeEstimate(box * mean, box * err, samples)


# -- empirical constants ----------------------------------------------------------------


def control_lists_check(
    frame: Frame,
    ball: PseudoBall,
    M: int,
    samples: int = 16,
    seed: int = 0,
) -> Dict[str, float]:
    """max over sampled q ∈ B^c(p, δ) and slots of F(L_i, q, δ)/F(L_i, p, δ) and of its inverse."""
    rng = np.random.default_rng(seed)
    at_p = WeightEngine(frame, ball.center, M).slot_weights(ball.delta)
    upper, lower = 0.0, 0.0
    for q in sample_ball(ball, samples, rng):
        at_q = WeightEngine(frame, q, M).slot_weights(ball.delta)
        ratio = at_q / at_p
        upper = max(upper, float(ratio.max()))
        lower = max(lower, float((1 / ratio).max()))
    return {"max_ratio": upper, "max_inverse_ratio": lower, "samples": samples}


def c0_search(
    domain: ModelDomain,
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    samples: int = 2048,
    seed: int = 0,
    cap: float = C0_CAP,
) -> float:
    """Largest c <= cap with |ρ| <= δ/2 on sampled points of B^c(p, δ)."""
    ball = make_ball(frame, domain, p, delta, 1.0)
    rng = np.random.default_rng(seed)
    unit = sample_polydisc(ball.radii, samples, rng)

    def admissible(c: float) -> bool:
        values = domain.defining_value(ball.chart.pull(unit * c))
        return bool(np.all(np.abs(values) <= delta / 2))

    if admissible(cap):
        return cap
    lo, hi = 0.0, cap
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def finite_type_floor(frame: Frame, p: Sequence[complex], deltas: Sequence[float], M: int) -> Tuple[float, List[float]]:
    """min_i F_i δ^{2/M} per δ and its minimum over the grid."""
    engine = WeightEngine(frame, p, M)
    per = [float(engine.slot_weights(d).min() * d ** (2.0 / M)) for d in deltas]
    return min(per), per
