"""
Adapted plurisubharmonic functions.

The construction follows the component-tuple scheme: each weight F_i(p, δ)
is comparable to the sum of its components |c_ii|/δ and |L_i φ/δ|^{2/l},
with φ the real and imaginary parts of the lists 𝓛(∂ρ) in L_i, conj(L_i).
For a tuple f of components the local function

    H(f, λ, B) = sum_{i in I} λ^{-3/2} e^{λ ψ_i} χ_{f,B}

lives on the tube Q^c(p, δ) over the pseudo-ball; the global function adds
A g(ρ/δ) + B_const |z|^2 to the pieces of a cover, with g the quadratic
profile below or g = exp.

Every piece is composed at the level of Taylor jets, so values, gradients,
complex Hessians and third derivatives are exact.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .algebra import (
    Jet,
    JetArgs,
    ListSpec,
    SmoothExpr,
    add,
    apply_field,
    get_space,
    list_apply,
    scale,
    word_tensors,
)
from .coords import PolyMap, adapted_coords, sample_ball
from .domains import Frame, ModelDomain, lift_to_boundary
from .exceptions import ConfigError, CoverError
from .homog import BallFamily
from .weights import FrameProvider, WeightEngine, check_eb1

logger = logging.getLogger("ftl.psh")

LAMBDA_MIN = 1.5
LAMBDA_MAX = 4.0
COVER_CAP = 64
MAX_COMPONENTS = 4
STRIP_DEPTHS = np.linspace(0.1, 2.0, 5)
# The safeguard calibrates on its own depths and samples, never on the
# verification grid.
CALIBRATION_DEPTHS = (0.3, 0.8, 1.3, 1.8)
CALIBRATION_SEED_OFFSET = 7919
SAFEGUARD_MARGIN = 2.0

# g(s) = (s + 2.5)^2 - 3.25 on s = ρ/δ: on the strip s in [-2, 0] it has
# g' in [1, 5], g'' = 2 and |g| <= 3.
PROFILE_SHIFT = 2.5
PROFILE_OFFSET = 3.25
PROFILE_BOUNDS = {"quadratic": 3.0, "exp": 1.0}
_FLOOR = 1e-300


# -- cutoffs on jets --------------------------------------------------------------


def smoothstep(x: np.ndarray) -> np.ndarray:
    """Quintic step: 0 for x <= 0, 1 for x >= 1, C^2."""
    t = np.clip(np.real(x), 0.0, 1.0)
    return t**3 * (10 - 15 * t + 6 * t**2)


def _smoothstep_derivatives(x0: np.ndarray, j: int) -> np.ndarray:
    t = np.real(x0)
    inside = (t > 0) & (t < 1)
    if j == 0:
        return smoothstep(t).astype(complex)
    if j == 1:
        d = 30 * t**2 * (t - 1) ** 2
    elif j == 2:
        d = 60 * t * (2 * t - 1) * (t - 1)
    elif j == 3:
        d = 60 * (6 * t**2 - 6 * t + 1)
    else:
        d = np.zeros_like(t)
    return np.where(inside, d, 0.0).astype(complex)


def step_jet(x: Jet) -> Jet:
    return x.compose(_smoothstep_derivatives)


def _zero_like(x: Jet) -> Jet:
    return Jet(x.space, np.zeros_like(x.coeffs))


def safe_power(x: Jet, exponent: float) -> Jet:
    """x^exponent for a nonnegative real jet; entries with value 0 give the zero jet."""
    alive = np.real(x.value) > _FLOOR
    out = _zero_like(x)
    if np.any(alive):
        part = Jet(x.space, x.coeffs[alive]).power(exponent)
        out.coeffs[alive] = part.coeffs
    return out


def chi(x: Jet) -> Jet:
    """χ: 0 on [0, 1/2], 1 on [1, ∞)."""
    return step_jet(x * 2.0 - 1.0)


def chi_ball(s: Jet) -> Jet:
    """χ_1 in |x|^2 = s: 1 on the ball of radius 1/2, 0 outside the unit ball."""
    return 1.0 - step_jet((s - 0.25) * (4.0 / 3.0))


# -- projection to the boundary -------------------------------------------------------


def projection_jets(rho: SmoothExpr, args: JetArgs, steps: int = 2) -> List[Jet]:
    """
    Jets of π(q) = q - ρ ∂̄ρ / (2|∂ρ|^2), iterated `steps` times (one Newton correction).

    For rigid domains this is the first-order normal flow to ∂Ω.
    """
    n = rho.n
    grads = [rho.derive(k, conjugated=True) for k in range(n)]
    z = list(args.z)
    for _ in range(steps):
        a = JetArgs(z, [j.conj() for j in z])
        r = rho.jet(a)
        gbar = [g.jet(a) for g in grads]
        norm2 = gbar[0] * gbar[0].conj()
        for g in gbar[1:]:
            norm2 = norm2 + g * g.conj()
        step = r / (norm2 * 2.0)
        z = [zk - step * gk for zk, gk in zip(z, gbar)]
    return z


def project(rho: SmoothExpr, points: np.ndarray, steps: int = 2) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    args = JetArgs.at_points(get_space(rho.n, 0), pts)
    return np.stack([j.value for j in projection_jets(rho, args, steps)], axis=-1)


# -- components -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Component:
    """
    One component of F_i: |c_ii|/δ (order 2) or |L_i φ/δ|^{2/l} with φ = Re or Im of a list.

    `phi` is None for the Levi component.
    """

    slot: int
    order: int
    label: str
    phi: Optional[SmoothExpr]
    source: SmoothExpr

    @property
    def is_levi(self) -> bool:
        return self.phi is None

    def jet(self, args: JetArgs, delta: float) -> Jet:
        """f at the points of args."""
        g = self.source.jet(args)
        modulus2 = (g * g.conj()).real()
        if self.is_levi:
            return safe_power(modulus2, 0.5) * (1.0 / delta)
        return safe_power(modulus2 * delta**-2, 1.0 / self.order)

    def value(self, points: np.ndarray, delta: float) -> np.ndarray:
        args = JetArgs.at_points(get_space(self.source.n, 0), np.atleast_2d(points))
        return np.real(self.jet(args, delta).value)


def _real_imag(expr: SmoothExpr) -> Tuple[SmoothExpr, SmoothExpr]:
    conj = expr.conjugate()
    re = add(scale(0.5, expr), scale(0.5, conj))
    im = add(scale(-0.5j, expr), scale(0.5j, conj))
    return re, im


def slot_components(
    frame: Frame,
    slot: int,
    p: Sequence[complex],
    delta: float,
    M: int,
    max_components: int = MAX_COMPONENTS,
) -> Tuple[List[Component], int]:
    """
    Components of F_slot that do not vanish at p, deduplicated, largest first.

    Returns:
        (components, number pruned)
    """
    pts = np.asarray(p, dtype=complex)[None, :]
    levi = Component(slot, 2, f"|c{slot + 1}{slot + 1}|", None, frame.levi_entries[(slot, slot)])
    candidates = [levi]
    letters = [(slot, False), (slot, True)]
    for l in range(3, M + 1):
        for word in np.ndindex(*([2] * (l - 1))):
            spec = ListSpec(tuple(letters[b] for b in word))
            value = list_apply(spec, frame.fields, frame.rho)
            if value.is_zero:
                continue
            name = spec.label([f"L{k + 1}" for k in range(frame.n)])
            for part, tag in zip(_real_imag(value), ("Re", "Im")):
                source = apply_field(frame.tangent[slot], part)
                if not source.is_zero:
                    candidates.append(Component(slot, l, f"{tag}{name}", part, source))
    kept: List[Tuple[float, Component]] = []
    seen = set()
    for comp in candidates:
        v = float(comp.value(pts, delta)[0])
        if v <= 1e-12 * max(1.0, 1.0 / delta):
            continue
        key = (comp.order, round(math.log(v), 9))
        if key in seen:
            continue
        seen.add(key)
        kept.append((v, comp))
    kept.sort(key=lambda item: -item[0])
    pruned = len(candidates) - min(len(kept), max_components)
    return [c for _, c in kept[:max_components]], pruned


@dataclass
class ComponentTuple:
    """An (n-1)-tuple of components with its dominance data at p."""

    components: Tuple[Component, ...]
    index: Tuple[int, ...]
    ratios: Tuple[float, ...]
    shares: Tuple[float, ...]
    degenerate: bool = False

    @property
    def active(self) -> Tuple[int, ...]:
        """Slots I whose component is not the Levi one."""
        return tuple(c.slot for c in self.components if not c.is_levi)

    def label(self) -> str:
        return " x ".join(c.label for c in self.components) if self.components else "(degenerate)"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tuple": self.label(),
            "index": list(self.index),
            "orders": [c.order for c in self.components],
            "ratios": list(self.ratios),
            "shares": list(self.shares),
            "active": list(self.active),
            "degenerate": self.degenerate,
        }


def enumerate_components(
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    M: int,
    max_components: int = MAX_COMPONENTS,
) -> List[ComponentTuple]:
    """
    Every (n-1)-tuple of components in lexicographic order.

    `ratios` hold f_i(p)/F_i(p, δ), `shares` f_i(p) over the sum of the slot's
    components. A slot without any nonvanishing component makes a single
    degenerate tuple.
    """
    pts = np.asarray(p, dtype=complex)
    weights = WeightEngine(frame, pts, M).slot_weights(delta)
    per_slot = []
    for i in range(frame.m):
        comps, pruned = slot_components(frame, i, pts, delta, M, max_components)
        if pruned:
            logger.debug(f"Slot {i + 1}: {pruned} components pruned or merged")
        per_slot.append(comps)
    if any(not comps for comps in per_slot):
        return [ComponentTuple((), (), (), (), degenerate=True)]
    values = [[float(c.value(pts[None, :], delta)[0]) for c in comps] for comps in per_slot]
    totals = [sum(v) for v in values]
    out = []
    for index in np.ndindex(*[len(c) for c in per_slot]):
        comps = tuple(per_slot[i][k] for i, k in enumerate(index))
        ratios = tuple(values[i][k] / weights[i] if weights[i] > 0 else 0.0 for i, k in enumerate(index))
        shares = tuple(values[i][k] / totals[i] for i, k in enumerate(index))
        out.append(ComponentTuple(comps, tuple(int(k) for k in index), ratios, shares))
    return out


# -- local functions ------------------------------------------------------------------


class JetFunction(Protocol):
    n: int

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        ...


@dataclass
class ExprFunction:
    """A closed-form expression as a function with jets (controls and tests)."""

    expr: SmoothExpr

    @property
    def n(self) -> int:
        return self.expr.n

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        return self.expr.jet(JetArgs.at_points(get_space(self.n, order), pts))

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.real(self.jet(points, 0).value)


@dataclass
class LocalPiece:
    """
    H(f, λ, B) at a center p, supported in Q^c(p, δ).

    The support is where |F^{1/2} Φ_p(π(q)) / c|^2 < 1, with F_n = δ^{-2}.
    """

    center: np.ndarray
    delta: float
    tuple: ComponentTuple
    lam: float
    B: float
    c: float
    chart: PolyMap
    slot_weights: np.ndarray
    rho: SmoothExpr

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def scales(self) -> np.ndarray:
        return np.concatenate([self.slot_weights, [self.delta**-2]]) / self.c**2

    @property
    def bound(self) -> float:
        """|H| <= |I| λ^{-3/2} e^{2λ}."""
        return len(self.tuple.active) * self.lam**-1.5 * math.exp(2 * self.lam)

    def _support_jet(self, projected: List[Jet]) -> Jet:
        coords = [comp.compose_jets(projected, [j.conj() for j in projected]) for comp in self.chart.forward]
        s = (coords[0] * coords[0].conj()).real() * self.scales[0]
        for k in range(1, self.n):
            s = s + (coords[k] * coords[k].conj()).real() * self.scales[k]
        return s

    def support_mask(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        args = JetArgs.at_points(get_space(self.n, 0), pts)
        s = self._support_jet(projection_jets(self.rho, args))
        return np.real(s.value) < 1.0

    def cutoff(self, args: JetArgs, projected: List[Jet]) -> Tuple[Jet, Jet]:
        """(χ'_{f,B}, χ_0) at the points of args."""
        pa = JetArgs(projected, [j.conj() for j in projected])
        prime: Optional[Jet] = None
        for comp in self.tuple.components:
            t = comp.jet(pa, self.delta) * (self.B / self.slot_weights[comp.slot])
            factor = chi(t)
            prime = factor if prime is None else prime * factor
        base = chi_ball(self._support_jet(projected))
        if prime is None:
            prime = base * 0.0 + 1.0
        return prime, base

    def psi(self, pa: JetArgs, comp: Component) -> Jet:
        assert comp.phi is not None
        weight = self.slot_weights[comp.slot] ** ((1 - comp.order) / 2.0)
        return comp.phi.jet(pa) * (weight / self.delta)

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        space = get_space(self.n, order)
        out = Jet(space, np.zeros(pts.shape[:-1] + (space.dim,), dtype=complex))
        if not self.tuple.active:
            return out
        mask = self.support_mask(pts)
        if not np.any(mask):
            return out
        args = JetArgs.at_points(space, pts[mask])
        projected = projection_jets(self.rho, args)
        pa = JetArgs(projected, [j.conj() for j in projected])
        prime, base = self.cutoff(args, projected)
        cut = prime * base
        total: Optional[Jet] = None
        for comp in self.tuple.components:
            if comp.is_levi:
                continue
            term = (self.psi(pa, comp) * self.lam).exp() * cut * self.lam**-1.5
            total = term if total is None else total + term
        assert total is not None
        out.coeffs[mask] = total.coeffs
        return out

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.real(self.jet(points, 0).value)


def local_H(
    frame: Frame,
    domain: ModelDomain,
    p: Sequence[complex],
    delta: float,
    f: ComponentTuple,
    lam: float,
    B: float,
    c: float,
    chart: Optional[PolyMap] = None,
    c0: Optional[float] = None,
    M: Optional[int] = None,
) -> LocalPiece:
    """
    H(f, λ, B) = sum_{i in I} λ^{-3/2} e^{λψ_i} χ_{f,B} on Q^c(p, δ).

    Raises:
        ConfigError: If λ <= 1 or c exceeds c_0
    """
    if lam <= 1:
        raise ConfigError(f"lambda must exceed 1, got {lam}")
    if c0 is not None and c > c0:
        raise ConfigError(f"Scale c = {c} exceeds c0 = {c0}")
    M = M or domain.M
    pts = np.asarray(p, dtype=complex)
    chart = chart or adapted_coords(frame, domain, pts, delta, M, measure=False)
    weights = WeightEngine(frame, pts, M).slot_weights(delta)
    return LocalPiece(pts, delta, f, lam, B, c, chart, weights, domain.rho)


# -- assembly ---------------------------------------------------------------------------


@dataclass
class ScheduleEntry:
    center: int
    tuple: str
    A: float
    B: float
    epsilon: float
    lam: float
    A_prime: float
    B_prime: float
    epsilon_prime: float


def lambda_for(A: float) -> float:
    return float(min(LAMBDA_MAX, max(LAMBDA_MIN, math.log(A) if A > 0 else LAMBDA_MIN)))


def component_schedule(tuples: Sequence[ComponentTuple], C: float, D: float, M: int, n: int, center: int = 0) -> List[ScheduleEntry]:
    """
    Constants (A_f, B_f, ε_f) from the largest tuple down.

    A_{f0} = C 4^{Mn+1}, B_{f0} = D, ε_{f0} = 1; each preceding tuple takes
    A = 3C sum of A' over the larger tuples, B = B' and ε = ε' of its
    successor, with A' = A + C λ^{1/2} e^{2λ}, B' = B + 4λ^2, ε' = ε/(1+λ).
    """
    ordered = sorted(tuples, key=lambda t: t.index, reverse=True)
    out: List[ScheduleEntry] = []
    A, B, eps = C * 4.0 ** (M * n + 1), D, 1.0
    for k, f in enumerate(ordered):
        if k > 0:
            prev = out[-1]
            A = 3 * C * sum(e.A_prime for e in out)
            B, eps = prev.B_prime, prev.epsilon_prime
        lam = lambda_for(A)
        out.append(
            ScheduleEntry(
                center=center,
                tuple=f.label(),
                A=A,
                B=B,
                epsilon=eps,
                lam=lam,
                A_prime=A + C * math.sqrt(lam) * math.exp(2 * lam),
                B_prime=B + 4 * lam**2,
                epsilon_prime=eps / (1 + lam),
            )
        )
    return out


def cover_centers(
    domain: ModelDomain,
    provider: FrameProvider,
    p0: Sequence[complex],
    delta: float,
    c: float,
    cap: int = COVER_CAP,
    candidates: int = 256,
    seed: int = 0,
) -> List[np.ndarray]:
    """
    Greedy maximal packing of ∂Ω ∩ B^c(p0, δ) by balls B^{c/2}(p_k, δ).

    Raises:
        CoverError: If more than `cap` centers are needed
    """
    pts = np.asarray(p0, dtype=complex)
    outer = BallFamily(domain, provider, pts, c)
    rng = np.random.default_rng(seed)
    raw = lift_to_boundary(domain, sample_ball(outer.ball(delta), candidates, rng))
    raw = raw[outer.contains(raw, delta)]
    centers = [pts]
    families = [BallFamily(domain, provider, pts, c / 2)]
    for q in raw:
        if any(bool(fam.contains(q, delta)) for fam in families):
            continue
        if len(centers) >= cap:
            raise CoverError(f"Cover of B^{c}(p0, {delta:.3e}) needs more than {cap} centers")
        centers.append(q)
        families.append(BallFamily(domain, provider, q, c / 2))
    logger.info(f"Cover with {len(centers)} centers at delta={delta:.3e}")
    return centers


@dataclass
class PSHAssembly:
    """H = sum of local pieces + A g(ρ/δ) + B_const |z|^2."""

    domain: ModelDomain
    delta: float
    p0: np.ndarray
    c: float
    centers: List[np.ndarray]
    pieces: List[LocalPiece]
    A: float
    B_const: float
    schedule: List[ScheduleEntry]
    dominance: List[Dict[str, Any]]
    constants: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    profile: str = "quadratic"

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def correction(self) -> float:
        """Safeguard share of B_const; its Hessian is correction times the identity."""
        return float(self.constants.get("correction", 0.0))

    @property
    def bound(self) -> float:
        """Recorded bound of |H| on the window."""
        local = sum(piece.bound for piece in self.pieces)
        return local + self.A * PROFILE_BOUNDS[self.profile] + self.B_const * self.domain.window**2

    def global_profile(self, r: Jet) -> Jet:
        s = r * (1.0 / self.delta)
        if self.profile == "exp":
            return s.exp()
        shifted = s + PROFILE_SHIFT
        return shifted * shifted - PROFILE_OFFSET

    def jet(self, points: np.ndarray, order: int = 2) -> Jet:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        space = get_space(self.n, order)
        args = JetArgs.at_points(space, pts)
        r = self.domain.rho.jet(args)
        total = self.global_profile(r) * self.A
        for zk in args.z:
            total = total + zk * zk.conj() * self.B_const
        for piece in self.pieces:
            total = total + piece.jet(pts, order)
        return total

    def value(self, points: np.ndarray) -> np.ndarray:
        return np.real(self.jet(points, 0).value)

    def hessian(self, points: np.ndarray) -> np.ndarray:
        return self.jet(points, 2).complex_hessian()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "c": self.c,
            "centers": len(self.centers),
            "pieces": len(self.pieces),
            "A": self.A,
            "B_const": self.B_const,
            "bound": self.bound,
            "profile": self.profile,
            "constants": dict(self.constants),
            "schedule": [asdict(e) for e in self.schedule],
            "dominance": self.dominance,
            "notes": list(self.notes),
        }


def measure_D(tuples: Sequence[ComponentTuple]) -> float:
    """Smallest D with some component f_i(p) >= F_i(p)/D in every slot, doubled for the ball."""
    live = [t for t in tuples if not t.degenerate]
    if not live:
        return 1.0
    m = len(live[0].ratios)
    best = [max(t.ratios[i] for t in live) for i in range(m)]
    return float(max(1.0, 2.0 / max(min(best), 1e-300)))


def strip_points(
    domain: ModelDomain,
    family: BallFamily,
    delta: float,
    count: int = 24,
    depths: Sequence[float] = tuple(STRIP_DEPTHS),
    seed: int = 0,
    include_center: bool = True,
) -> np.ndarray:
    """Points of W(p0) ∩ {-2δ <= ρ < 0}: boundary samples pushed to ρ = -tδ."""
    rng = np.random.default_rng(seed)
    base = lift_to_boundary(domain, sample_ball(family.ball(delta), count, rng))
    if include_center:
        base = np.vstack([family.p[None, :], base])
    out = []
    for t in depths:
        q = base.copy()
        q[:, -1] -= t * delta
        out.append(q)
    return np.concatenate(out)


def assemble_H(
    domain: ModelDomain,
    provider: FrameProvider,
    delta: float,
    c: float = 0.25,
    p0: Optional[Sequence[complex]] = None,
    cap: int = COVER_CAP,
    max_components: int = MAX_COMPONENTS,
    seed: int = 0,
    safeguard: bool = True,
    profile: str = "quadratic",
) -> PSHAssembly:
    """
    Cover, schedule and sum the local pieces, then add A g(ρ/δ) + B_const |z|^2.

    C is the EB1 constant measured at p0 and D the measured dominance
    constant. A = 2e^3 γ_1 + 1 and B_const = C A + γ_1 with γ_1 the largest
    piece bound.

    The smallest Hessian eigenvalue is measured on a calibration grid
    disjoint from the one strip_points gives verify_adapted (other depths,
    other samples, no center) and recorded as constants["raw_deficit"].
    With `safeguard`, B_const is raised by SAFEGUARD_MARGIN times that
    deficit, recorded as constants["correction"]; without it the deficit
    is left for verify_adapted to report.

    Raises:
        CoverError: If the cover exceeds `cap`
        ConfigError: For an unknown global profile
    """
    if profile not in PROFILE_BOUNDS:
        raise ConfigError(f"Unknown global profile {profile!r}; expected one of {', '.join(PROFILE_BOUNDS)}")
    M = provider.M
    origin = np.zeros(domain.n, dtype=complex) if p0 is None else np.asarray(p0, dtype=complex)
    frame0 = provider(origin, delta)
    C = max(1.0, check_eb1(frame0, origin, delta, M, samples=64).value)
    notes: List[str] = []
    if delta >= domain.window:
        centers: List[np.ndarray] = []
        notes.append("strip outside the window: no local pieces")
    else:
        centers = cover_centers(domain, provider, origin, delta, c, cap, seed=seed)
    pieces: List[LocalPiece] = []
    schedule: List[ScheduleEntry] = []
    dominance: List[Dict[str, Any]] = []
    D_values = []
    for k, center in enumerate(centers):
        frame = provider(center, delta)
        tuples = enumerate_components(frame, center, delta, M, max_components)
        for t in tuples:
            dominance.append({"center": k, **t.to_dict()})
        live = [t for t in tuples if not t.degenerate]
        if not live:
            continue
        D = measure_D(live)
        D_values.append(D)
        entries = component_schedule(live, C, D, M, domain.n, center=k)
        schedule.extend(entries)
        chart = adapted_coords(frame, domain, center, delta, M, measure=False)
        by_label = {t.label(): t for t in live}
        for entry in entries:
            f = by_label[entry.tuple]
            if f.active:
                pieces.append(local_H(frame, domain, center, delta, f, entry.lam, entry.B, c, chart=chart, M=M))
    gamma1 = max((piece.bound for piece in pieces), default=0.0)
    A = 2 * math.exp(3) * gamma1 + 1
    B_const = C * A + gamma1
    assembly = PSHAssembly(
        domain=domain,
        delta=delta,
        p0=origin,
        c=c,
        centers=centers,
        pieces=pieces,
        A=A,
        B_const=B_const,
        schedule=schedule,
        dominance=dominance,
        constants={"C": C, "D": max(D_values, default=1.0), "gamma1": gamma1, "raw_deficit": 0.0, "correction": 0.0},
        notes=notes,
        profile=profile,
    )
    if pieces:
        deficit = calibration_deficit(assembly, provider, seed)
        assembly.constants["raw_deficit"] = deficit
        if deficit > 0 and safeguard:
            raise_by = SAFEGUARD_MARGIN * deficit
            assembly.B_const += raise_by
            assembly.constants["correction"] = raise_by
            assembly.notes.append(f"B_const raised by {raise_by:.6g} for a calibration Hessian deficit of {deficit:.6g}")
            logger.warning(f"PSH safeguard raised B_const by {raise_by:.6g}")
        elif deficit > 0:
            assembly.notes.append(f"Calibration Hessian deficit {deficit:.6g} left uncorrected")
            logger.warning(f"PSH Hessian deficit {deficit:.6g} on the calibration grid, safeguard off")
    logger.info(f"Assembled {len(pieces)} local pieces, A={A:.4g}, B_const={assembly.B_const:.4g}")
    return assembly


def calibration_deficit(assembly: PSHAssembly, provider: FrameProvider, seed: int = 0, count: int = 48) -> float:
    """max(0, -min eigenvalue) of the complex Hessian on the calibration grid."""
    family = BallFamily(assembly.domain, provider, assembly.p0, assembly.c)
    grid = strip_points(
        assembly.domain,
        family,
        assembly.delta,
        count=count,
        depths=CALIBRATION_DEPTHS,
        seed=seed + CALIBRATION_SEED_OFFSET,
        include_center=False,
    )
    lowest = float(np.linalg.eigvalsh(assembly.hessian(grid)).min())
    return max(0.0, -lowest)


# -- classification -------------------------------------------------------------------


def classify_points(assembly: PSHAssembly, points: np.ndarray) -> List[Dict[str, int]]:
    """
    Sizes of E1, E2, E3 at each point, per center.

    E3: χ'_{f,B_f} = 1 and χ_0 >= ε_f. E1: some smaller tuple is B'_f-dominant
    with χ_0 >= ε'_f. E2: the rest.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    space = get_space(assembly.n, 0)
    entries = {(e.center, e.tuple): e for e in assembly.schedule}
    out = [{"E1": 0, "E2": 0, "E3": 0} for _ in range(len(pts))]
    for piece in assembly.pieces:
        k = next(i for i, c in enumerate(assembly.centers) if c is piece.center or np.array_equal(c, piece.center))
        entry = entries[(k, piece.tuple.label())]
        args = JetArgs.at_points(space, pts)
        projected = projection_jets(piece.rho, args)
        prime, base = piece.cutoff(args, projected)
        chi0 = np.real(base.value)
        e3 = (np.real(prime.value) >= 1.0 - 1e-12) & (chi0 >= entry.epsilon)
        smaller = [p for p in assembly.pieces if p.center is piece.center and p.tuple.index < piece.tuple.index]
        e1 = np.zeros(len(pts), dtype=bool)
        for other in smaller:
            dominant = LocalPiece(other.center, other.delta, other.tuple, other.lam, entry.B_prime, other.c, other.chart, other.slot_weights, other.rho)
            p2, _ = dominant.cutoff(args, projected)
            e1 |= (np.real(p2.value) >= 1.0 - 1e-12) & (chi0 >= entry.epsilon_prime)
        for b in range(len(pts)):
            key = "E1" if e1[b] else ("E3" if e3[b] else "E2")
            out[b][key] += 1
    return out


# -- verification -----------------------------------------------------------------------


@dataclass
class Witness:
    condition: str
    ratio: float
    point: List[complex]
    direction: str


@dataclass
class VerificationReport:
    """
    Measured adaptedness constant.

    beta = max(1, S β2, β3 / S) where S = sup|H| on the grid normalizes H to
    |H| <= 1; β2 = max F(L,q,δ)/<∂∂̄H; L, conj L>, β3 = max |𝓛H| / prod F^{1/2}
    over lists of length <= 3 in the frame and N. raw_min_eigenvalue is
    the Hessian floor without the safeguard correction of an assembly.
    """

    beta: float
    sup_H: float
    beta_hessian: float
    beta_lists: float
    min_eigenvalue: float
    grid_points: int
    directions: int
    delta: float
    witnesses: List[Witness] = field(default_factory=list)
    failures: List[Witness] = field(default_factory=list)
    raw_min_eigenvalue: float = float("nan")

    @property
    def raw_deficit(self) -> float:
        return max(0.0, -self.raw_min_eigenvalue) if math.isfinite(self.raw_min_eigenvalue) else 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["raw_deficit"] = self.raw_deficit
        for key in ("witnesses", "failures"):
            data[key] = [{**w, "point": [str(z) for z in w["point"]]} for w in data[key]]
        return data


def _unit_directions(n: int, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return np.vstack([np.eye(n, dtype=complex), z])


def verify_adapted(
    H: JetFunction,
    domain: ModelDomain,
    frame: Frame,
    delta: float,
    points: np.ndarray,
    directions: int = 32,
    seed: int = 0,
    M: Optional[int] = None,
    list_depth: int = 3,
) -> VerificationReport:
    """
    Check |H| <= 1 (after normalization), the Hessian lower bound and the list bounds.

    Args:
        H: PSHAssembly or any object with jet(points, order)
        domain: Domain
        frame: Frame spanning E together with N
        delta: Scale
        points: Grid in W(p0) ∩ {-2δ <= ρ < 0}
        directions: Random unit coefficient vectors on (L_1..L_{n-1}, N) besides the basis
        seed: Seed of the directions
        M: List bound of the weights
        list_depth: Longest list in the third condition

    Returns:
        The report; a non-positive Hessian makes β2 infinite with a failure witness
    """
    M = M or domain.M
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    n = domain.n
    jet = H.jet(pts, max(2, list_depth))
    values = np.real(jet.value)
    sup_h = float(np.abs(values).max())
    hess = jet.truncate(2).complex_hessian()
    min_eig = float(np.linalg.eigvalsh(0.5 * (hess + np.conj(np.swapaxes(hess, -1, -2)))).min())
    raw_min = min_eig - float(getattr(H, "correction", 0.0))
    dirs = _unit_directions(n, directions, seed)
    engines = WeightEngine.at_points(frame, pts, M)
    frames = frame.holo_matrix(pts)
    witnesses: List[Witness] = []
    failures: List[Witness] = []
    beta2 = 0.0
    best2: Optional[Witness] = None
    for b, engine in enumerate(engines):
        f = engine.weights(dirs, delta)
        v = dirs @ frames[b]
        levi = np.real(np.einsum("dk,kl,dl->d", v, hess[b], np.conj(v)))
        ratio = np.where(levi > 0, f / np.where(levi > 0, levi, 1.0), np.inf)
        worst = int(np.argmax(ratio))
        if ratio[worst] > beta2:
            beta2 = float(ratio[worst])
            best2 = Witness("hessian", beta2, list(pts[b]), str(np.round(dirs[worst], 4)))
        if not np.isfinite(ratio[worst]):
            failures.append(Witness("hessian", float("inf"), list(pts[b]), str(np.round(dirs[worst], 4))))
    if best2 is not None:
        witnesses.append(best2)
    letters = frame.letters(include_normal=True)
    levels = word_tensors(letters, jet.coeffs[None, ...], JetArgs.at_points(jet.space, pts), list_depth)
    slot = np.stack([e.slot_weights(delta) for e in engines], axis=-1)
    per_letter = np.concatenate([slot, np.full((1, len(pts)), delta**-2.0)], axis=0)
    per_letter = np.concatenate([per_letter, per_letter], axis=0)
    root = np.sqrt(per_letter)
    beta3 = 0.0
    for l in range(1, list_depth + 1):
        vals = np.abs(levels[l][..., 0, :])
        denom = np.ones(vals.shape)
        for axis in range(l):
            shape = [1] * l + [len(pts)]
            shape[axis] = len(letters)
            denom = denom * root.reshape(shape)
        ratio = vals / denom
        if ratio.size and ratio.max() > beta3:
            beta3 = float(ratio.max())
            idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            witnesses.append(Witness(f"lists of length {l}", beta3, list(pts[idx[-1]]), str(idx[:-1])))
    scale_h = max(sup_h, 1e-300)
    beta = max(1.0, scale_h * beta2, beta3 / scale_h)
    if min_eig < -1e-8:
        failures.append(Witness("plurisubharmonicity", min_eig, [], ""))
    logger.info(f"verify_adapted at delta={delta:.3e}: beta={beta:.4g} (sup|H|={sup_h:.3g}, hessian {beta2:.3g}, lists {beta3:.3g})")
    return VerificationReport(
        beta=float(beta),
        sup_H=sup_h,
        beta_hessian=beta2,
        beta_lists=beta3,
        min_eigenvalue=min_eig,
        grid_points=len(pts),
        directions=len(dirs),
        delta=delta,
        witnesses=witnesses,
        failures=failures,
        raw_min_eigenvalue=raw_min,
    )
