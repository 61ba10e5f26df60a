"""
Localized domains D = {ρ + φ(|z - O|^2) < 0}.

The bump φ(x) = K0 exp(-1/(x - μ^2)) vanishes to infinite order on the
sphere |z - O| = μ, where O lies on the inner real normal at P0 = 0 at
distance d. This module provides the bump calculus, the projection π of a
neighbourhood onto ∂Ω along the real normal of ρ, the transport of tangent
vectors between ∂D and ∂Ω, the F^φ weights and the minimizing frame on D.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import null_space
from scipy.optimize import brentq

from .algebra import BumpPhi, Field, JetArgs, SmoothExpr, add, bump_derivative, get_space, mul, reciprocal, scale
from .algebra.expr import constant, modulus_squared_expr
from .domains import Frame, FrameProvenance, ModelDomain, normal_field, tangent_frame
from .exceptions import ConfigError, DomainError, FrameError, ProjectionError
from .weights import WeightEngine

logger = logging.getLogger("ftl.localization")

DEFAULT_D = 0.2
MU_FACTOR = 1.5
K0_START = 1.0
K0_MAX = 2.0**20
PSC_SAMPLES = 200
PROJECTION_TOL = 1e-10
MAX_BUMP_ORDER = 4
# below this the new boundary piece is numerically on ∂Ω
PHI_FLOOR = 1e-200

Vector = Union[Field, Sequence[complex], np.ndarray]


# -- the bump -----------------------------------------------------------------------


def bump_derivatives(mu: float, k0: float, x: Union[float, np.ndarray], order: int = 0) -> np.ndarray:
    """
    φ^(k)(x) for k <= 4, zero for x <= μ^2.

    Raises:
        ConfigError: If order is outside 0..4
    """
    if not 0 <= order <= MAX_BUMP_ORDER:
        raise ConfigError(f"Bump derivatives are available up to order {MAX_BUMP_ORDER}, got {order}")
    return bump_derivative(mu, k0, x, order)


@dataclass(eq=False)
class LocalizedDomain:
    """
    D = {r < 0} with r = ρ + φ(|z - O|^2).

    Attributes:
        base: The model domain Ω
        mu: Bump radius, 4d/3 <= μ <= 2d
        k0: Bump amplitude
        d: Distance from O to P0
        origin: O = (0, ..., 0, -d)
        attempts: (K0, min Levi eigenvalue) for every amplitude tried
    """

    base: ModelDomain
    mu: float
    k0: float
    d: float
    attempts: List[Tuple[float, float]] = field(default_factory=list)
    k0_threshold: Optional[float] = None

    def __post_init__(self) -> None:
        if not 4 * self.d / 3 - 1e-12 <= self.mu <= 2 * self.d + 1e-12:
            raise ConfigError(f"Bump radius {self.mu} outside [4d/3, 2d] for d = {self.d}")
        if self.k0 <= 0:
            raise ConfigError(f"Bump amplitude must be positive, got {self.k0}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def M(self) -> int:
        return self.base.M

    @property
    def name(self) -> str:
        return f"{self.base.name}+bump"

    @cached_property
    def origin(self) -> np.ndarray:
        o = np.zeros(self.n, dtype=complex)
        o[-1] = -self.d
        return o

    @cached_property
    def radius2(self) -> SmoothExpr:
        return modulus_squared_expr(self.n, self.origin)

    @cached_property
    def psi(self) -> SmoothExpr:
        return BumpPhi(self.mu, self.k0, self.radius2)

    @cached_property
    def r(self) -> SmoothExpr:
        return add(self.base.rho, self.psi)

    def centered(self, points: np.ndarray) -> np.ndarray:
        """Coordinates z - O."""
        return np.asarray(points, dtype=complex) - self.origin

    def phi(self, points: np.ndarray, order: int = 0) -> np.ndarray:
        x = np.sum(np.abs(self.centered(points)) ** 2, axis=-1)
        return bump_derivative(self.mu, self.k0, x, order)

    def defining_value(self, points: np.ndarray) -> np.ndarray:
        return self.base.defining_value(points) + self.phi(points)


# -- geometry of r ------------------------------------------------------------------


def levi_min_eigenvalue(r: SmoothExpr, points: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of the Levi form of r on ker ∂r, one value per point."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    jet = r.jet(JetArgs.at_points(get_space(r.n, 2), pts))
    grad = jet.gradient()
    hess = jet.complex_hessian()
    out = np.empty(len(pts))
    for b in range(len(pts)):
        basis = null_space(grad[b][None, :])
        levi = basis.T @ hess[b] @ np.conj(basis)
        out[b] = float(np.linalg.eigvalsh(0.5 * (levi + np.conj(levi.T))).min())
    return out


def sample_new_boundary(ld: LocalizedDomain, count: int, rng: np.random.Generator, attempts: int = 20) -> np.ndarray:
    """
    Points of ∂D outside ∂Ω (|z - O| > μ).

    Draws the tangential coordinates and Im z_n inside the bump ball and
    solves r = 0 for Re z_n with brentq.
    """
    out: List[np.ndarray] = []
    n = ld.n
    for _ in range(attempts):
        need = count - len(out)
        if need <= 0:
            break
        raw = rng.standard_normal((4 * need, 2 * n - 1))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        raw *= ld.mu * np.sqrt(rng.random((4 * need, 1)))
        for row in raw:
            q = np.zeros(n, dtype=complex)
            q[:-1] = row[: n - 1] + 1j * row[n - 1 : 2 * n - 2]
            q[-1] = 1j * row[-1]
            p_value = float(ld.base.defining_value(q))
            if p_value >= ld.d:
                continue

            def g(x: float) -> float:
                z = q.copy()
                z[-1] = x + q[-1]
                return float(ld.defining_value(z))

            lo, hi = -ld.d, -p_value
            if g(lo) >= 0 or g(hi) <= 0:
                continue
            z = q.copy()
            z[-1] = brentq(g, lo, hi, xtol=1e-15) + q[-1]
            if ld.phi(z) > PHI_FLOOR:
                out.append(z)
            if len(out) >= count:
                break
    if len(out) < count:
        logger.warning(f"Only {len(out)} of {count} points found on the new boundary piece")
    return np.array(out[:count], dtype=complex).reshape(-1, n)


def radial_transversality(ld: LocalizedDomain, samples: int = 256, seed: int = 0) -> float:
    """min |sum ρ_{z_i} (z - O)_i| over boundary points of Ω in B(O, 2μ)."""
    rng = np.random.default_rng(seed)
    tangent = rng.standard_normal((samples, ld.n - 1)) + 1j * rng.standard_normal((samples, ld.n - 1))
    tangent *= 2 * ld.mu * rng.random((samples, 1)) / np.linalg.norm(tangent, axis=1, keepdims=True)
    pts = ld.base.boundary_point(tangent)
    pts = pts[np.linalg.norm(ld.centered(pts), axis=1) < 2 * ld.mu]
    if len(pts) == 0:
        return float("nan")
    grads = np.stack([ld.base.rho_poly.derive(k).evaluate(pts) for k in range(ld.n)], axis=-1)
    return float(np.min(np.abs(np.sum(grads * ld.centered(pts), axis=-1))))


def select_bump(
    base: ModelDomain,
    d: float = DEFAULT_D,
    samples: int = PSC_SAMPLES,
    seed: int = 0,
    k0_start: float = K0_START,
    k0_max: float = K0_MAX,
) -> LocalizedDomain:
    """
    μ = 1.5 d and the first doubled K0 making ∂D \\ ∂Ω strictly pseudoconvex on a sample.

    The threshold between the last failing and the first passing amplitude is
    located with brentq on log K0 and recorded in `k0_threshold`.

    Raises:
        DomainError: If no amplitude up to k0_max passes
    """
    mu = MU_FACTOR * d
    attempts: List[Tuple[float, float]] = []

    def lowest(k0: float) -> float:
        ld = LocalizedDomain(base, mu, k0, d)
        # the boundary moves with K0
        local = sample_new_boundary(ld, samples, np.random.default_rng(seed))
        return float(levi_min_eigenvalue(ld.r, local).min()) if len(local) else float("-inf")

    k0 = k0_start
    previous: Optional[float] = None
    while k0 <= k0_max:
        value = lowest(k0)
        attempts.append((k0, value))
        logger.debug(f"K0={k0:.4g}: min Levi eigenvalue {value:.4g}")
        if value > 0:
            threshold = None
            if previous is not None:
                try:
                    threshold = math.exp(brentq(lambda t: lowest(math.exp(t)), math.log(previous), math.log(k0), xtol=1e-3))
                except ValueError:
                    threshold = None
            ld = LocalizedDomain(base, mu, k0, d, attempts=attempts, k0_threshold=threshold or k0)
            logger.info(f"Bump for {base.name}: mu={mu:.4g}, K0={k0:.4g} (threshold {ld.k0_threshold:.4g})")
            return ld
        previous = k0
        k0 *= 2
    raise DomainError(f"No bump amplitude up to {k0_max:g} makes the new boundary strictly pseudoconvex")


def local_tangent_frame(ld: LocalizedDomain) -> Frame:
    """Canonical frame of r: T_i = ∂_i - (r_{z_i}/r_{z_n}) ∂_n, with the unit normal of r."""
    n = ld.n
    r = ld.r
    inv = reciprocal(r.derive(n - 1))
    tangent = []
    for i in range(n - 1):
        holo: List[SmoothExpr] = [constant(n, 0.0) for _ in range(n)]
        holo[i] = constant(n, 1.0)
        holo[-1] = scale(-1.0, mul(r.derive(i), inv))
        tangent.append(Field(holo))
    return Frame(tuple(tangent), normal_field(r), r, provenance=FrameProvenance.LOCALIZED)


# -- projection -----------------------------------------------------------------------


def _base(domain: Union[LocalizedDomain, ModelDomain]) -> ModelDomain:
    return domain.base if isinstance(domain, LocalizedDomain) else domain


def _real_gradient(domain: ModelDomain, z: np.ndarray) -> np.ndarray:
    """2 ∂ρ/∂conj(z): the real gradient written as a complex vector."""
    return 2 * np.stack([domain.rho_poly.derive(k, conjugated=True).evaluate(z) for k in range(domain.n)], axis=-1)


def newton_projection(
    domain: Union[LocalizedDomain, ModelDomain],
    q: Sequence[complex],
    tol: float = PROJECTION_TOL,
    max_steps: int = 50,
) -> np.ndarray:
    """
    Newton steps z <- z - ρ G/|G|^2 along the real gradient G.

    Raises:
        ProjectionError: If |ρ| does not fall below tol
    """
    base = _base(domain)
    z = np.array(q, dtype=complex)
    for _ in range(max_steps):
        value = float(base.defining_value(z))
        if abs(value) <= tol:
            return z
        g = _real_gradient(base, z)
        z = z - value * g / np.sum(np.abs(g) ** 2)
    raise ProjectionError(f"Newton projection of {np.asarray(q)} stalled at |rho| = {abs(base.defining_value(z)):.3e}")


def _normal_flow(base: ModelDomain, z0: np.ndarray, length: float) -> np.ndarray:
    """Flow of G/|G|^2 for time `length` (ρ changes by exactly `length`)."""
    n = base.n
    if length == 0:
        return z0.copy()

    def rhs(_: float, y: np.ndarray) -> np.ndarray:
        z = y[:n] + 1j * y[n:]
        g = _real_gradient(base, z)
        v = g / np.sum(np.abs(g) ** 2)
        return np.concatenate([v.real, v.imag])

    sol = solve_ivp(rhs, (0.0, length), np.concatenate([z0.real, z0.imag]), method="DOP853", rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise ProjectionError(f"Normal flow failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n] + 1j * y[n:]


def project_to_boundary(
    domain: Union[LocalizedDomain, ModelDomain],
    q: Sequence[complex],
    tol: float = PROJECTION_TOL,
) -> np.ndarray:
    """
    π(q): integrate the normalized real-gradient flow of ρ to ρ = 0, then polish by Newton.

    Raises:
        ProjectionError: If the residual stays above tol
    """
    base = _base(domain)
    z0 = np.array(q, dtype=complex)
    value = float(base.defining_value(z0))
    if abs(value) <= tol:
        return z0
    z = _normal_flow(base, z0, -value)
    return newton_projection(base, z, tol)


def push_inward(domain: Union[LocalizedDomain, ModelDomain], q: Sequence[complex], s: float) -> np.ndarray:
    """Follow the real normal flow of ρ inward until ρ = ρ(q) - s."""
    return _normal_flow(_base(domain), np.array(q, dtype=complex), -s)


# -- transport of tangent vectors ----------------------------------------------------


def _holo(vector: Vector, point: np.ndarray) -> np.ndarray:
    if isinstance(vector, Field):
        return vector.coefficients_at(point[None, :])[0][0]
    return np.asarray(vector, dtype=complex)


def _gradient(expr: SmoothExpr, point: np.ndarray) -> np.ndarray:
    return np.array([complex(np.asarray(expr.derive(k).evaluate(point[None, :]))[0]) for k in range(expr.n)])


@dataclass
class TransportedVector:
    """A tangent vector at p on ∂D and its partner at q = π(p) on ∂Ω."""

    p: np.ndarray
    q: np.ndarray
    tilde: np.ndarray
    rho: np.ndarray
    beta: complex
    beta_formula: complex

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": [str(z) for z in self.p],
            "q": [str(z) for z in self.q],
            "tilde": [str(z) for z in self.tilde],
            "rho": [str(z) for z in self.rho],
            "beta": str(self.beta),
            "beta_formula": str(self.beta_formula),
        }


def _normal_at(ld: LocalizedDomain, q: np.ndarray) -> Tuple[np.ndarray, complex]:
    normal = normal_field(ld.base.rho).coefficients_at(q[None, :])[0][0]
    n_rho = complex(normal @ _gradient(ld.base.rho, q))
    return normal, n_rho


def beta_formula(ld: LocalizedDomain, p: np.ndarray, q: np.ndarray, rho_vector: np.ndarray) -> complex:
    """-<L^ρ, z> φ'(|z|^2) / ((N∘π)ρ + <N∘π, z> φ'(|z|^2)) with z = p - O, without the remainder."""
    z = ld.centered(p)
    d1 = float(ld.phi(p, 1))
    normal, _ = _normal_at(ld, q)
    n_rho_p = complex(normal @ _gradient(ld.base.rho, p))
    return complex(-np.vdot(z, rho_vector) * d1 / (n_rho_p + np.vdot(z, normal) * d1))


def project_field(ld: LocalizedDomain, p: Sequence[complex], vector: Vector) -> TransportedVector:
    """
    L^ρ = L∘π^{-1} - β N / (Nρ) at q = π(p), with β = (L∘π^{-1})(ρ).

    `vector` is a field or the (1,0) coefficients of L̃ at p, tangent to r.
    """
    pt = np.asarray(p, dtype=complex)
    a = _holo(vector, pt)
    q = project_to_boundary(ld, pt)
    normal, n_rho = _normal_at(ld, q)
    beta = complex(a @ _gradient(ld.base.rho, q))
    rho_vector = a - (beta / n_rho) * normal
    return TransportedVector(pt, q, a, rho_vector, beta / n_rho, beta_formula(ld, pt, q, rho_vector))


def lift_field(ld: LocalizedDomain, p: Sequence[complex], rho_vector: Vector) -> TransportedVector:
    """
    L̃ = L^ρ∘π + (β∘π) N∘π at p, with β∘π fixed by tangency to r.

    `rho_vector` holds the (1,0) coefficients of L^ρ at q = π(p).
    """
    pt = np.asarray(p, dtype=complex)
    q = project_to_boundary(ld, pt)
    b = _holo(rho_vector, q)
    normal, _ = _normal_at(ld, q)
    grad_r = _gradient(ld.r, pt)
    beta = complex(-(b @ grad_r) / (normal @ grad_r))
    return TransportedVector(pt, q, b + beta * normal, b, beta, beta_formula(ld, pt, q, b))


# -- F^φ weights ------------------------------------------------------------------------


def _pairing(ld: LocalizedDomain, p: np.ndarray, vector: Vector, on_rho: bool) -> complex:
    """<L^ρ∘π, z> = sum b_i conj(z_i)."""
    b = _holo(vector, p) if on_rho else project_field(ld, p, vector).rho
    return complex(np.vdot(ld.centered(p), b))


def fphi_weight(
    ld: LocalizedDomain,
    vector: Vector,
    p: Sequence[complex],
    delta: float,
    M: Optional[int] = None,
    on_rho: bool = False,
) -> float:
    """
    F^φ(L, z, δ) = φ'(|z|^2)/δ + |<L^ρ∘π, z>|^2 φ''(|z|^2)/δ + δ^{-1/M}.

    Args:
        ld: Localized domain
        vector: L̃ at p (or L^ρ at π(p) when on_rho is set)
        p: Point of ∂D
        delta: Scale
        M: List bound (default the domain's)
        on_rho: Whether `vector` already lives on ∂Ω
    """
    M = M or ld.M
    pt = np.asarray(p, dtype=complex)
    pairing = _pairing(ld, pt, vector, on_rho)
    d1 = float(ld.phi(pt, 1))
    d2 = float(ld.phi(pt, 2))
    return d1 / delta + abs(pairing) ** 2 * d2 / delta + delta ** (-1.0 / M)


def ftilde_phi_weight(
    ld: LocalizedDomain,
    vector: Vector,
    p: Sequence[complex],
    delta: float,
    M: Optional[int] = None,
    on_rho: bool = False,
) -> float:
    """Full sum: sum_{k<=M/2} (φ^(k)/δ)^{1/k} + |<L^ρ∘π, z>|^2 sum_{2<=k<=M} |φ^(k)/δ|^{2/k} + δ^{-1/M}."""
    M = M or ld.M
    pt = np.asarray(p, dtype=complex)
    pairing = _pairing(ld, pt, vector, on_rho)
    x = float(np.sum(np.abs(ld.centered(pt)) ** 2))
    first = sum(max(float(bump_derivative(ld.mu, ld.k0, x, k)) / delta, 0.0) ** (1.0 / k) for k in range(1, M // 2 + 1))
    second = sum(abs(float(bump_derivative(ld.mu, ld.k0, x, k)) / delta) ** (2.0 / k) for k in range(2, M + 1))
    return first + abs(pairing) ** 2 * second + delta ** (-1.0 / M)


# -- minimizing frame -------------------------------------------------------------------------


@dataclass
class LocalFrame:
    """
    Frame on ∂D at p built from an extremal frame at q = π(p).

    `rho_vectors` are the L_i^ρ(q) and `lifted` the L̃_i(p), slot order.
    `choices` records, per slot, whether T or W was taken.
    """

    frame: Frame
    p: np.ndarray
    q: np.ndarray
    delta: float
    rho_vectors: np.ndarray
    lifted: np.ndarray
    choices: List[str]
    f_rho_phi: np.ndarray
    K_prime: float
    spread: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": [str(z) for z in self.p],
            "q": [str(z) for z in self.q],
            "delta": self.delta,
            "choices": self.choices,
            "f_rho_phi": self.f_rho_phi.tolist(),
            "K_prime": self.K_prime,
            "spread": self.spread,
        }


def _smallest_direction(basis: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, float]:
    form = np.conj(basis.T) @ np.diag(weights) @ basis
    values, vectors = np.linalg.eigh(0.5 * (form + np.conj(form.T)))
    return basis @ vectors[:, 0], float(values[0])


def _least_unit(basis: np.ndarray) -> np.ndarray:
    v = basis[:, 0]
    k = int(np.argmax(np.abs(v) > 1e-12))
    v = v * np.exp(-1j * np.angle(v[k]))
    return v / np.linalg.norm(v)


def build_local_frame(
    ld: LocalizedDomain,
    p: Sequence[complex],
    delta: float,
    omega_frame: Frame,
    M: Optional[int] = None,
    spread_samples: int = 16,
    seed: int = 0,
) -> LocalFrame:
    """
    Descending construction of L_{n-1}^ρ, ..., L_1^ρ from an orthonormal frame at π(p).

    For each step k the candidate W minimizes sum_{i<n-k} |a_i|^2 F_i^Ω over
    unit vectors orthogonal to z and to the fields already chosen; T is the
    lexicographically least unit vector of span(L_{n-k}^Ω..L_{n-1}^Ω) orthogonal
    to the chosen fields. T is kept when the W value is at least
    φ''(|z|^2)/δ |<T, z>|^2.

    Raises:
        FrameError: If the T candidate space is empty
    """
    M = M or ld.M
    pt = np.asarray(p, dtype=complex)
    q = project_to_boundary(ld, pt)
    z = ld.centered(pt)
    rows = omega_frame.holo_matrix(q[None, :])[0][:-1]
    gram = rows @ np.conj(rows.T)
    if np.max(np.abs(gram - np.eye(len(rows)))) > 1e-6:
        logger.warning("Frame at the projected point is not orthonormal; orthonormalize it first")
    engine = WeightEngine(omega_frame, q, M)
    weights = engine.slot_weights(delta)
    order = np.argsort(-weights, kind="stable")
    rows, weights = rows[order], weights[order]
    m = len(rows)
    d2 = float(ld.phi(pt, 2))
    d1 = float(ld.phi(pt, 1))
    constraint = rows @ np.conj(z)

    def f_rho_phi(a: np.ndarray) -> float:
        base = float(engine.weights(_unsort(a, order)[None, :], delta)[0])
        return base + d1 / delta + abs(np.vdot(z, a @ rows)) ** 2 * d2 / delta

    chosen: List[np.ndarray] = []
    choices: List[str] = []
    spread = 1.0
    rng = np.random.default_rng(seed)
    for k in range(1, m + 1):
        j = m - k
        orth = [np.conj(c) for c in chosen]
        h_rows = np.array([constraint] + orth, dtype=complex)
        h_basis = null_space(h_rows)
        span = np.eye(m, dtype=complex)[:, j:]
        g_basis = span @ null_space(np.array(orth) @ span) if orth else span
        if g_basis.shape[1] == 0:
            raise FrameError(f"No admissible direction for slot {j + 1}: dimension bookkeeping violated")
        t = _least_unit(g_basis)
        if g_basis.shape[1] > 1:
            values = [f_rho_phi(t)]
            for _ in range(spread_samples):
                x = rng.standard_normal(g_basis.shape[1]) + 1j * rng.standard_normal(g_basis.shape[1])
                alt = g_basis @ x
                values.append(f_rho_phi(alt / np.linalg.norm(alt)))
            spread = max(spread, max(values) / min(values))
        masked = np.where(np.arange(m) < j, weights, 0.0)
        if h_basis.shape[1]:
            w, w_value = _smallest_direction(h_basis, masked)
        else:
            w, w_value = t, float("inf")
        threshold = d2 / delta * abs(np.vdot(z, t @ rows)) ** 2
        if w_value >= threshold:
            chosen.append(t)
            choices.append("T")
        else:
            chosen.append(w / np.linalg.norm(w))
            choices.append("W")
    chosen.reverse()
    choices.reverse()
    coeffs = np.array(chosen)
    rho_vectors = coeffs @ rows
    lifted = np.array([lift_field(ld, pt, v).tilde for v in rho_vectors])
    lifted /= np.linalg.norm(lifted, axis=1, keepdims=True)
    base_frame = local_tangent_frame(ld)
    frame = base_frame.recombined(
        lifted[:, :-1], FrameProvenance.LOCALIZED, notes=(f"minimizing frame at {np.round(pt, 6).tolist()}",)
    )
    values = np.array([f_rho_phi(c) for c in coeffs])
    ratios = values[1:] / values[:-1] if m > 1 else np.array([1.0])
    K_prime = float(max(1.0, ratios.max()))
    logger.debug(f"Local frame at {pt}: choices {''.join(choices)}, K'={K_prime:.4g}")
    return LocalFrame(frame, pt, q, delta, rho_vectors, lifted, choices, values, K_prime, spread)


def _unsort(a: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Coefficients in the original slot order of the frame."""
    out = np.zeros_like(a)
    out[order] = a
    return out


# -- weight comparison -------------------------------------------------------------------------


@dataclass
class LocalizedWeightReport:
    """F(L̃, p, δ) against F(L^ρ, π(p), δ) + F^φ(L̃, p, δ)."""

    p: np.ndarray
    delta: float
    left: np.ndarray
    right: np.ndarray
    normal_ratio: float

    @property
    def ratios(self) -> np.ndarray:
        return self.left / self.right

    @property
    def max_ratio(self) -> float:
        r = self.ratios
        return float(max(r.max(), (1.0 / r).max(), self.normal_ratio, 1.0 / self.normal_ratio))

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"direction": k, "delta": self.delta, "left": float(l), "right": float(r), "ratio": float(l / r)}
            for k, (l, r) in enumerate(zip(self.left, self.right))
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": [str(z) for z in self.p],
            "delta": self.delta,
            "max_ratio": self.max_ratio,
            "normal_ratio": self.normal_ratio,
            "rows": self.rows(),
        }


def localized_weight_check(
    ld: LocalizedDomain,
    p: Sequence[complex],
    delta: float,
    frame: Union[LocalFrame, Frame],
    M: Optional[int] = None,
    samples: int = 8,
    seed: int = 0,
) -> LocalizedWeightReport:
    """
    Both sides of F(L̃, z, δ) ≃ F(L^ρ, π(z), δ) + F^φ(L̃, z, δ).

    Directions are the frame fields and `samples` random unit combinations.
    The left side uses the weights of the frame on r; the right side the
    canonical frame of Ω at π(p) plus fphi_weight.
    """
    M = M or ld.M
    pt = np.asarray(p, dtype=complex)
    local = frame.frame if isinstance(frame, LocalFrame) else frame
    m = local.m
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, m)) + 1j * rng.standard_normal((samples, m))
    dirs = np.vstack([np.eye(m, dtype=complex), dirs / np.linalg.norm(dirs, axis=1, keepdims=True)])
    left = WeightEngine(local, pt, M).weights(dirs, delta)
    rows = local.holo_matrix(pt[None, :])[0][:-1]
    q = project_to_boundary(ld, pt)
    base_engine = WeightEngine(tangent_frame(ld.base), q, M)
    right = np.empty(len(dirs))
    for k, a in enumerate(dirs):
        moved = project_field(ld, pt, a @ rows)
        # the canonical tangent field T_i of ρ has coefficient e_i in slot i
        right[k] = float(base_engine.weights(moved.rho[None, :-1], delta)[0]) + fphi_weight(ld, moved.rho, pt, delta, M, on_rho=True)
    normal_dir = np.zeros((1, m + 1), dtype=complex)
    normal_dir[0, -1] = 1.0
    normal_ratio = float(WeightEngine(local, pt, M).weights(normal_dir, delta)[0] * delta**2)
    logger.debug(f"Localized weight check at {pt}: max ratio over {len(dirs)} directions")
    return LocalizedWeightReport(pt, delta, left, right, normal_ratio)
