"""
Weights F_M(L, p, δ) and extremality certificates.

For a constant combination L = sum a_i L_i of frame fields, the weight sums
|𝓛(∂ρ)(p)/δ|^{2/|𝓛|} over all words 𝓛 of length 2..M in the letters L and
conj(L). Each word value is multilinear in the coefficients, so the engine
evaluates the list tensors of the frame once per point and contracts them
against any batch of directions. Weights are kept as profiles
F(δ) = sum_k A_k δ^{-2/k} (k = 1 holds the normal part |a_n|^2 δ^{-2}), which
makes δ sweeps and slopes exact.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .algebra import (
    Field,
    JetArgs,
    ListSpec,
    add,
    apply_field,
    bracket,
    get_space,
    list_tensors,
    mul,
    pair_drho,
    word_tensors,
)
from .domains import Frame, FrameProvenance, ModelDomain, levi_eigen_frame, tangent_frame
from .exceptions import FrameError, WeightError
from .fitting import SlopeFit, log_grid, loglog_fit

logger = logging.getLogger("ftl.weights")

MAX_LIST_BOUND = 8

# Directions contracted per einsum batch
_CHUNK = 64

# List values below this fraction of the largest one are round-off
_CHOP = 1e-13

Direction = Union[Sequence[complex], np.ndarray]


def _check_bound(M: int) -> None:
    if M < 2:
        raise WeightError(f"List bound M must be at least 2, got {M}")
    if M > MAX_LIST_BOUND:
        raise WeightError(f"List bound M must be at most {MAX_LIST_BOUND}, got {M}")


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise WeightError(f"delta must be positive, got {delta}")


def profile_value(profile: np.ndarray, delta: Union[float, np.ndarray]) -> np.ndarray:
    """Evaluate sum_k A_k δ^{-2/k} for profiles (..., M+1) at a scalar or a grid of δ."""
    prof = np.asarray(profile, dtype=float)
    ks = np.arange(1, prof.shape[-1])
    d = np.asarray(delta, dtype=float)
    powers = d[..., None] ** (-2.0 / ks)
    if d.ndim == 0:
        return prof[..., 1:] @ powers
    return prof[..., 1:] @ powers.T


def leading_exponent(profile: np.ndarray, rel_tol: float = 1e-12) -> float:
    """Exponent e with F ~ δ^e as δ -> 0, or nan for a zero profile."""
    prof = np.asarray(profile, dtype=float)
    top = prof[1:].max(initial=0.0)
    if top <= 0:
        return float("nan")
    ks = [k for k in range(1, prof.shape[-1]) if prof[k] > rel_tol * top]
    return -2.0 / min(ks)


def _chop(values: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(values).max(initial=0.0)))
    out = values.copy()
    out[np.abs(out) <= _CHOP * scale] = 0
    return out


# -- reports ----------------------------------------------------------------------


@dataclass(frozen=True)
class ListTerm:
    spec: ListSpec
    magnitude: float
    contribution: float


@dataclass
class WeightReport:
    """Value of F_M(L, p, δ) with the per-list breakdown."""

    value: float
    terms: List[ListTerm]
    dominant: Optional[ListSpec]
    p: np.ndarray
    delta: float
    M: int
    profile: np.ndarray

    def at(self, delta: Union[float, np.ndarray]) -> np.ndarray:
        return profile_value(self.profile, delta)

    @property
    def leading_exponent(self) -> float:
        return leading_exponent(self.profile)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "delta": self.delta,
            "M": self.M,
            "p": [complex(z) for z in self.p],
            "dominant": self.dominant.label(["L"]) if self.dominant else None,
            "profile": {str(k): float(a) for k, a in enumerate(self.profile) if k >= 1 and a > 0},
            "terms": [
                {"list": t.spec.label(["L"]), "magnitude": t.magnitude, "contribution": t.contribution}
                for t in self.terms
                if t.contribution > 0
            ],
        }


@dataclass
class ExtremalityCertificate:
    """
    Sampled extremality constant.

    K_est (or α_est) is a lower bound for the true constant: sampling
    cannot certify a supremum.
    """

    kind: str
    value: float
    witness: str
    sample_size: int
    p: np.ndarray
    delta: float
    degenerate_slots: Tuple[int, ...] = ()
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "value": self.value,
            "witness": self.witness,
            "sample_size": self.sample_size,
            "delta": self.delta,
            "degenerate_slots": list(self.degenerate_slots),
            "notes": list(self.notes) + ["sampled value is a lower bound for the true constant"],
        }


# -- the engine -------------------------------------------------------------------


class WeightEngine:
    """
    List tensors of a frame at one point, contracted against directions.

    Args:
        frame: Frame whose tangent fields span the directions
        p: Evaluation point
        M: List bound
    """

    def __init__(self, frame: Frame, p: Sequence[complex], M: int):
        _check_bound(M)
        self.frame = frame
        self.p = np.asarray(p, dtype=complex)
        self.M = M
        raw = list_tensors(frame.letters(), frame.rho, self.p, M)
        self.tensors = {k: _chop(v) for k, v in raw.items()}

    @classmethod
    def at_points(cls, frame: Frame, points: np.ndarray, M: int) -> List["WeightEngine"]:
        """One engine per point from a single batched list computation."""
        _check_bound(M)
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        raw = list_tensors(frame.letters(), frame.rho, pts, M)
        engines = []
        for b in range(len(pts)):
            engine = cls.__new__(cls)
            engine.frame = frame
            engine.p = pts[b]
            engine.M = M
            engine.tensors = {k: _chop(v[..., b]) for k, v in raw.items()}
            engines.append(engine)
        return engines

    @property
    def m(self) -> int:
        return self.frame.m

    def _split(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a = np.atleast_2d(np.asarray(directions, dtype=complex))
        if a.shape[-1] == self.m:
            return a, np.zeros(a.shape[0])
        if a.shape[-1] == self.m + 1:
            return a[:, : self.m], np.abs(a[:, self.m]) ** 2
        raise WeightError(f"Direction has {a.shape[-1]} coefficients; frame has {self.m} tangent fields")

    def _letter_weights(self, tangent: np.ndarray) -> np.ndarray:
        m = self.m
        w = np.zeros((tangent.shape[0], 2, 2 * m), dtype=complex)
        w[:, 0, :m] = tangent
        w[:, 1, m:] = np.conj(tangent)
        return w

    def word_values(self, tangent: np.ndarray, k: int) -> np.ndarray:
        """Values of every word of length k in (L, conj L); shape (D,) + (2,)*k."""
        w = self._letter_weights(tangent)
        cur = np.einsum("dbn,n...->d...b", w, self.tensors[k])
        for _ in range(k - 1):
            cur = np.einsum("dbn,dn...->d...b", w, cur)
        return cur

    def profiles(self, directions: Direction) -> np.ndarray:
        """Profiles A_k (shape (D, M+1)) of a batch of coefficient vectors."""
        tangent, normal = self._split(np.asarray(directions))
        out = np.zeros((tangent.shape[0], self.M + 1))
        out[:, 1] = normal
        for start in range(0, tangent.shape[0], _CHUNK):
            block = tangent[start : start + _CHUNK]
            for k in range(2, self.M + 1):
                values = self.word_values(block, k)
                out[start : start + _CHUNK, k] = (np.abs(values) ** (2.0 / k)).reshape(len(block), -1).sum(axis=1)
        return out

    def profile(self, direction: Direction) -> np.ndarray:
        return self.profiles(np.asarray(direction)[None, :])[0]

    def weights(self, directions: Direction, delta: float) -> np.ndarray:
        _check_delta(delta)
        return profile_value(self.profiles(directions), delta)

    def slot_profiles(self) -> np.ndarray:
        return self.profiles(np.eye(self.m, dtype=complex))

    def slot_weights(self, delta: float) -> np.ndarray:
        """F(L_i, p, δ) for every tangent field."""
        return self.weights(np.eye(self.m, dtype=complex), delta)

    def report(self, direction: Direction, delta: float) -> WeightReport:
        _check_delta(delta)
        tangent, normal = self._split(np.asarray(direction))
        terms: List[ListTerm] = []
        for k in range(2, self.M + 1):
            values = self.word_values(tangent, k)[0]
            for index in product((0, 1), repeat=k):
                magnitude = float(abs(values[index]))
                spec = ListSpec(tuple((0, bool(b)) for b in index))
                terms.append(ListTerm(spec, magnitude, (magnitude / delta) ** (2.0 / k)))
        prof = self.profile(direction)
        value = float(profile_value(prof, delta))
        best = max(terms, key=lambda t: t.contribution, default=None)
        dominant = best.spec if best is not None and best.contribution > normal[0] * delta**-2 else None
        return WeightReport(value, terms, dominant, self.p, delta, self.M, prof)


def _field_profile(x: Field, rho: Any, p: np.ndarray, M: int) -> np.ndarray:
    tensors = list_tensors([x, x.conjugate()], rho, p, M)
    out = np.zeros(M + 1)
    for k, values in tensors.items():
        out[k] = float((np.abs(_chop(values)) ** (2.0 / k)).sum())
    return out


def weight(L: Union[Field, Direction], frame: Frame, p: Sequence[complex], delta: float, M: int) -> WeightReport:
    """
    F_M(L, p, δ).

    Args:
        L: Coefficients on the frame (n-1 tangent, optionally the normal last),
            the frame's normal field, or any Field
        frame: Frame
        p: Point
        delta: Scale
        M: List bound

    Returns:
        WeightReport; the normal field gets exactly δ^{-2}

    Raises:
        WeightError: If M is outside 2..8 or delta is not positive
    """
    _check_bound(M)
    _check_delta(delta)
    pts = np.asarray(p, dtype=complex)
    if isinstance(L, Field):
        if L is frame.normal:
            prof = np.zeros(M + 1)
            prof[1] = 1.0
        else:
            prof = _field_profile(L, frame.rho, pts, M)
        return WeightReport(float(profile_value(prof, delta)), [], None, pts, delta, M, prof)
    return WeightEngine(frame, pts, M).report(L, delta)


def mixed_weight(spec: ListSpec, weights: Union[Sequence[float], Mapping[int, float]], delta: Optional[float] = None) -> float:
    """
    F^{𝓛/2} = prod_i F_i^{l_i/2}.

    Slots missing from `weights` equal to the number of tangent weights are
    the normal slot and contribute δ^{-2}.

    Raises:
        WeightError: If a slot has no weight
    """
    table = dict(weights) if isinstance(weights, Mapping) else dict(enumerate(weights))
    normal_slot = len(table) if not isinstance(weights, Mapping) else None
    total = 1.0
    for slot, (count, _, _) in spec.counters.items():
        if slot in table:
            f = table[slot]
        elif slot == normal_slot and delta is not None:
            f = delta**-2
        else:
            raise WeightError(f"No weight for slot {slot} of list {spec}")
        total *= f ** (count / 2.0)
    return float(total)


# -- EB1 --------------------------------------------------------------------------


def eb1_directions(m: int, samples: int, seed: int = 0) -> np.ndarray:
    """Basis vectors, pairwise mixes (e_i ± e_j)/√2, (e_i ± √-1 e_j)/√2 and seeded sphere samples."""
    rows = [row for row in np.eye(m, dtype=complex)]
    for i, j in combinations(range(m), 2):
        for phase in (1, -1, 1j, -1j):
            v = np.zeros(m, dtype=complex)
            v[i] = 1
            v[j] = phase
            rows.append(v / np.sqrt(2))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, m)) + 1j * rng.standard_normal((samples, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return np.vstack([np.asarray(rows), g])


def _degenerate(slot_weights: np.ndarray) -> Tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(slot_weights <= 0))


def _format_direction(a: np.ndarray) -> str:
    return "(" + ", ".join(f"{z.real:.4g}{z.imag:+.4g}j" for z in a) + ")"


def check_eb1(
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    M: int,
    samples: int = 256,
    seed: int = 0,
    engine: Optional[WeightEngine] = None,
) -> ExtremalityCertificate:
    """
    EB1 constant: max over sampled unit a of r and 1/r, r = F(sum a_i L_i) / sum |a_i|^2 F_i.

    Directions touching a slot with F_i = 0 are excluded and the slot is flagged.

    Raises:
        WeightError: If samples < 1
    """
    if samples < 1:
        raise WeightError(f"EB1 needs at least one sample, got {samples}")
    engine = engine or WeightEngine(frame, p, M)
    slot = engine.slot_weights(delta)
    degenerate = _degenerate(slot)
    dirs = eb1_directions(frame.m, samples, seed)
    if degenerate:
        keep = np.all(np.abs(dirs[:, list(degenerate)]) < 1e-15, axis=1)
        dirs = dirs[keep]
    if len(dirs) == 0:
        return ExtremalityCertificate("EB1", 1.0, "all slots degenerate", 0, engine.p, delta, degenerate)
    values = engine.weights(dirs, delta)
    split = (np.abs(dirs) ** 2) @ slot
    ratio = values / split
    score = np.maximum(ratio, 1.0 / ratio)
    best = int(np.argmax(score))
    logger.debug(f"EB1 at delta={delta:.3e}: K_est={score[best]:.6g} over {len(dirs)} directions")
    return ExtremalityCertificate(
        kind="EB1",
        value=float(score[best]),
        witness=_format_direction(dirs[best]),
        sample_size=len(dirs),
        p=engine.p,
        delta=delta,
        degenerate_slots=degenerate,
    )


# -- EB2 --------------------------------------------------------------------------


def basis_letters(frame: Frame) -> List[Field]:
    """L_1..L_{n-1}, N and their conjugates, in that order."""
    base = list(frame.fields)
    return base + [f.conjugate() for f in base]


def letter_names(frame: Frame) -> List[str]:
    names = [f"L{i + 1}" for i in range(frame.m)] + ["N"]
    return names + [f"conj({x})" for x in names]


def _columns(fields: Sequence[Field], args: JetArgs) -> np.ndarray:
    """Coefficient jets (holo then anti) of each field; shape (2n, len(fields), dim)."""
    n = args.space.nvar
    out = np.zeros((2 * n, len(fields), args.space.dim), dtype=complex)
    for col, x in enumerate(fields):
        for slot, jet in x.coefficient_jets(args):
            out[slot, col] = jet.coeffs
    return out


def _jet_matmul(space: Any, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return space.multiply(x[:, :, None, :], y[None, :, :, :]).sum(axis=1)


def bracket_coefficient_jets(frame: Frame, pairs: Sequence[Tuple[Field, Field]], p: np.ndarray, order: int) -> np.ndarray:
    """
    Jets of the coefficients of each bracket in the basis of `basis_letters`.

    Returns:
        Array (2n, len(pairs), dim) of coefficient jets at p

    Raises:
        FrameError: If the basis matrix is singular at p
    """
    space = get_space(frame.n, order)
    args = JetArgs.at_points(space, p)
    basis = _columns(basis_letters(frame), args)
    a0 = basis[..., 0]
    det = abs(np.linalg.det(a0))
    if det < 1e-12:
        raise FrameError(f"Frame with conjugates is singular at {p}: |det| = {det:.3e}")
    a0inv = np.linalg.inv(a0)
    rest = basis.copy()
    rest[..., 0] = 0
    step = -np.einsum("ik,kjd->ijd", a0inv, rest)
    inverse = np.zeros_like(basis)
    inverse[..., 0] = a0inv
    term = inverse.copy()
    for _ in range(order):
        term = _jet_matmul(space, step, term)
        inverse = inverse + term
    targets = _columns([bracket(x, y) for x, y in pairs], args)
    return _jet_matmul(space, inverse, targets)


def check_eb2(
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    M: int,
    depth: Optional[int] = None,
    engine: Optional[WeightEngine] = None,
) -> ExtremalityCertificate:
    """
    EB2 constant: max of F_k^{1/2} |𝓛 a^k_ij(p)| / (F^{𝓛/2} F_i^{1/2} F_j^{1/2}).

    Brackets of tangent letters are decomposed in the frame, its conjugates
    and N, conj(N); words 𝓛 run over the same 2n letters up to `depth`
    (default M - 2).

    Raises:
        FrameError: If the frame is singular at p
    """
    engine = engine or WeightEngine(frame, p, M)
    depth = M - 2 if depth is None else depth
    pts = engine.p
    m, n = frame.m, frame.n
    slot = engine.slot_weights(delta)
    letter_f = np.concatenate([slot, [delta**-2], slot, [delta**-2]])
    root = np.sqrt(letter_f)
    tangent_letters = list(range(m)) + [n + i for i in range(m)]
    letters = basis_letters(frame)
    pairs = list(combinations(tangent_letters, 2))
    coeffs = bracket_coefficient_jets(frame, [(letters[i], letters[j]) for i, j in pairs], pts, depth)
    space = get_space(n, depth)
    args = JetArgs.at_points(space, pts)
    flat = coeffs.reshape(-1, space.dim)
    levels = word_tensors(letters, flat, args, depth)
    pair_root = np.array([root[i] * root[j] for i, j in pairs])
    nl = len(letters)
    best, witness = 0.0, "none"
    word_root = np.ones(())
    for length, level in enumerate(levels):
        values = np.abs(_chop(level.reshape((nl,) * length + (2 * n, len(pairs)))))
        denominator = word_root[..., None, None] * pair_root
        numerator = values * root[:, None]
        ratio = np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)
        if ratio.size and ratio.max() > best:
            best = float(ratio.max())
            idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            names = letter_names(frame)
            word = ", ".join(names[w] for w in idx[:length])
            i, j = pairs[idx[-1]]
            witness = f"[{names[i]}, {names[j]}] -> {names[idx[-2]]}, list ({word})"
        word_root = np.multiply.outer(word_root, root)
    logger.debug(f"EB2 at delta={delta:.3e}: K_est={best:.6g} ({witness})")
    return ExtremalityCertificate("EB2", best, witness, len(pairs), pts, delta, _degenerate(slot))


# -- B(alpha) ---------------------------------------------------------------------


def check_balpha(
    frame: Frame,
    p: Sequence[complex],
    delta: float,
    M: int,
    engine: Optional[WeightEngine] = None,
) -> ExtremalityCertificate:
    """α_est = max over i != j and lists of length <= M-2 of |𝓛c_ij| / (δ F^{𝓛/2} F_i^{1/2} F_j^{1/2})."""
    engine = engine or WeightEngine(frame, p, M)
    m = frame.m
    slot = engine.slot_weights(delta)
    root = np.sqrt(slot)
    letter_root = np.concatenate([root, root])
    off = ~np.eye(m, dtype=bool)
    best, witness = 0.0, "none"
    word_root = np.ones(())
    names = [f"L{i + 1}" for i in range(m)] + [f"conj(L{i + 1})" for i in range(m)]
    for length in range(0, M - 1):
        tensor = engine.tensors[length + 2]
        c = np.abs(tensor[..., :m, m:])
        denominator = delta * word_root[..., None, None] * np.outer(root, root)
        ratio = np.divide(c, denominator, out=np.zeros_like(c), where=(denominator > 0) & off)
        if ratio.size and ratio.max() > best:
            best = float(ratio.max())
            idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            word = ", ".join(names[w] for w in idx[:length])
            witness = f"c_{idx[-2] + 1}{idx[-1] + 1} under ({word})"
        word_root = np.multiply.outer(word_root, letter_root)
    return ExtremalityCertificate("Balpha", best, witness, m * (m - 1), engine.p, delta, _degenerate(slot))


# -- orthonormalization and lower bounds --------------------------------------------


def orthonormalize(frame: Frame, p: Sequence[complex], delta: float, M: int) -> Frame:
    """
    Reorder by decreasing F(L_i, p, δ) and orthonormalize at p by decreasing induction.

    The i-th output field only involves the input fields j >= i (after
    reordering), so each new field lies in the span of the weaker ones.

    Raises:
        FrameError: If the tangent fields are dependent at p
    """
    pts = np.asarray(p, dtype=complex)
    m = frame.m
    slot = WeightEngine(frame, pts, M).slot_weights(delta)
    order = np.argsort(-slot, kind="stable")
    rows = frame.holo_matrix(pts)[:m][order]
    u = np.zeros((m, m), dtype=complex)
    done: List[Tuple[np.ndarray, np.ndarray]] = []
    for idx in reversed(range(m)):
        coeff = np.zeros(m, dtype=complex)
        coeff[idx] = 1
        vec = rows[idx].copy()
        for c, v in done:
            proj = np.vdot(v, vec)
            vec = vec - proj * v
            coeff = coeff - proj * c
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise FrameError(f"Tangent fields are dependent at {pts}")
        vec, coeff = vec / norm, coeff / norm
        done.append((coeff, vec))
        u[idx] = coeff
    matrix = np.zeros((m, m), dtype=complex)
    matrix[:, order] = u
    return frame.recombined(matrix, FrameProvenance.ORTHONORMAL, notes=(f"orthonormal at {tuple(pts)}",))


def weight_lower_bound_diag(frame: Frame, p: Sequence[complex], delta: float, M: int) -> np.ndarray:
    """
    Per field, sum over k with Re((L_i conj L_i)^k c_ii)(p) > 0 and 2k + 1 <= M of
    [Re(...)/δ]^{2/(2k+2)}.
    """
    _check_bound(M)
    pts = np.asarray(p, dtype=complex)
    kmax = (M - 1) // 2
    space = get_space(frame.n, 2 * kmax)
    args = JetArgs.at_points(space, pts)
    bounds = np.zeros(frame.m)
    for i in range(frame.m):
        target = frame.levi_entries[(i, i)].jet(args).coeffs[None, :]
        letters = [frame.tangent[i], frame.tangent[i].conjugate()]
        levels = word_tensors(letters, target, args, 2 * kmax)
        for k in range(kmax + 1):
            value = levels[2 * k][(0, 1) * k + (0,)].real
            if value > _CHOP:
                bounds[i] += (value / delta) ** (1.0 / (k + 1))
    return bounds


def weight_lower_bound_check(frame: Frame, p: Sequence[complex], deltas: Sequence[float], M: int) -> List[Dict[str, Any]]:
    """F_i against its diagonal lower bound across a δ grid."""
    engine = WeightEngine(frame, p, M)
    rows = []
    for delta in deltas:
        f = engine.slot_weights(delta)
        bound = weight_lower_bound_diag(frame, p, delta, M)
        for i in range(frame.m):
            ratio = f[i] / bound[i] if bound[i] > 0 else float("inf")
            rows.append({"delta": float(delta), "slot": i + 1, "F": float(f[i]), "bound": float(bound[i]), "ratio": float(ratio)})
    return rows


# -- the Herbort statistic ----------------------------------------------------------


SEPARATION_CONSTANT = 4.0
NOT_SEPARABLE = "not separable at constant K"
NO_OBSTRUCTION = "no obstruction found"


@dataclass
class SeparationReport:
    """Two-direction statistic s(δ) = F(mix) / max(F(first), F(second))."""

    domain: str
    deltas: np.ndarray
    first: np.ndarray
    second: np.ndarray
    mixed: np.ndarray
    statistic: np.ndarray
    fit: SlopeFit
    deep_fit: SlopeFit
    exponent: float
    K: float
    threshold: float
    verdict: str
    crossover: Optional[float] = None

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"delta": float(d), "F_first": float(a), "F_second": float(b), "F_mixed": float(c), "s": float(s)}
            for d, a, b, c, s in zip(self.deltas, self.first, self.second, self.mixed, self.statistic)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "domain": self.domain,
            "K": self.K,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "exponent": self.exponent,
            "crossover_delta": self.crossover,
            "fit": self.fit.to_dict(),
            "deep_fit": self.deep_fit.to_dict(),
        }


def _statistic(profiles: np.ndarray, deltas: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    first, second, mixed = (profile_value(profiles[i], deltas) for i in range(3))
    return first, second, mixed, mixed / np.maximum(first, second)


def separation_certificate(
    domain: ModelDomain,
    p: Sequence[complex],
    deltas: Sequence[float],
    K: float,
    frame: Optional[Frame] = None,
) -> SeparationReport:
    """
    Non-separation statistic for a three-dimensional domain.

    The verdict is "not separable" when s(δ) exceeds 4 K^3 on the grid or
    when s(δ) grows without bound as δ -> 0 (negative leading exponent); the
    δ where s crosses the threshold is reported.

    Raises:
        WeightError: If the domain is not three-dimensional
    """
    if domain.n != 3:
        raise WeightError(f"The separation statistic needs n = 3, got n = {domain.n}")
    frame = frame or tangent_frame(domain)
    engine = WeightEngine(frame, p, domain.M)
    mix = np.array([1, 1], dtype=complex) / np.sqrt(2)
    profiles = engine.profiles(np.vstack([np.eye(2, dtype=complex), mix]))
    grid = np.asarray(deltas, dtype=float)
    first, second, mixed, s = _statistic(profiles, grid)
    fit = loglog_fit(grid, s)
    deep = log_grid(1e-14, 1e-10, 9)
    deep_fit = loglog_fit(deep, _statistic(profiles, deep)[3])
    # max(F_first, F_second) is governed by the more singular exponent
    exponent = leading_exponent(profiles[2]) - np.nanmin([leading_exponent(profiles[0]), leading_exponent(profiles[1])])
    if np.isnan(exponent):
        exponent = 0.0
    threshold = SEPARATION_CONSTANT * K**3
    crossover = None
    if exponent < -1e-9:

        def gap(t: float) -> float:
            return float(np.log(_statistic(profiles, np.asarray([np.exp(t)]))[3][0] / threshold))

        lo, hi = np.log(1e-150), np.log(grid.max())
        if gap(lo) > 0 > gap(hi):
            crossover = float(np.exp(brentq(gap, lo, hi)))
        elif gap(hi) >= 0:
            crossover = float(grid.max())
    blocked = bool(np.any(s > threshold)) or exponent < -1e-9
    verdict = NOT_SEPARABLE if blocked else NO_OBSTRUCTION
    logger.info(f"Separation statistic on {domain.name}: exponent {exponent:.4f}, verdict '{verdict}' at K={K}")
    return SeparationReport(domain.name, grid, first, second, mixed, s, fit, deep_fit, exponent, K, threshold, verdict, crossover)


# -- combined certificates ------------------------------------------------------------


@dataclass
class StrongExtremalityReport:
    deltas: np.ndarray
    eb1: List[float]
    eb2: List[float]
    alpha: List[float]
    alpha_fit: Optional[SlopeFit]
    K_max: float
    verdict: str

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"delta": float(d), "K_est_EB1": a, "K_est_EB2": b, "alpha_est": c}
            for d, a, b, c in zip(self.deltas, self.eb1, self.eb2, self.alpha)
        ]


def strong_extremality(
    frame: Frame,
    p: Sequence[complex],
    deltas: Sequence[float],
    M: int,
    K_max: float = 100.0,
    samples: int = 128,
) -> StrongExtremalityReport:
    """
    EB1, EB2 and B(α) over a δ grid.

    The frame is reported strongly extremal when both K estimates stay below
    K_max and α_est decreases with δ (or vanishes).
    """
    engine = WeightEngine(frame, p, M)
    grid = np.asarray(deltas, dtype=float)
    eb1, eb2, alpha = [], [], []
    for delta in grid:
        eb1.append(check_eb1(frame, p, delta, M, samples, engine=engine).value)
        eb2.append(check_eb2(frame, p, delta, M, engine=engine).value)
        alpha.append(check_balpha(frame, p, delta, M, engine=engine).value)
    positive = np.asarray(alpha) > 0
    alpha_fit = loglog_fit(grid[positive], np.asarray(alpha)[positive]) if positive.sum() >= 2 else None
    small_alpha = alpha_fit is None or alpha_fit.slope > 0
    ok = max(eb1) <= K_max and max(eb2) <= K_max and small_alpha
    verdict = "strongly extremal" if ok else "not certified"
    return StrongExtremalityReport(grid, eb1, eb2, alpha, alpha_fit, K_max, verdict)


def bracket_identity_check(frame: Frame, points: np.ndarray) -> float:
    """
    Largest relative defect of the commutation identity for derivatives of Levi entries.

    With c(X, Y) = <∂ρ, [X, Y]>, g = |∂ρ| and a^s_XY the coefficients of
    [X, Y] in the basis E_s of `basis_letters`:

        L_j c_ik - L_i c_jk = sum_s a^s_{ji} c(E_s, conj L_k)
            + (L_j log g) c_ik - (L_i log g) c_jk
            - sum_s a^s_{i conj k} c(L_j, E_s) + sum_s a^s_{j conj k} c(L_i, E_s)
    """
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    rho = frame.rho
    n, m = frame.n, frame.m
    letters = basis_letters(frame)
    tangent = frame.tangent
    conj = [x.conjugate() for x in tangent]

    def ev(expr: Any) -> np.ndarray:
        return np.broadcast_to(expr.evaluate(pts), pts.shape[:-1])

    def c_val(x: Field, y: Field) -> np.ndarray:
        return ev(pair_drho(bracket(x, y), rho))

    def coefficients(x: Field, y: Field) -> np.ndarray:
        basis = np.stack([np.concatenate(f.coefficients_at(pts), axis=-1) for f in letters], axis=-1)
        target = np.concatenate(bracket(x, y).coefficients_at(pts), axis=-1)
        return np.linalg.solve(basis, target[..., None])[..., 0]

    g2 = add(*[mul(rho.derive(j), rho.derive(j, conjugated=True)) for j in range(n)])
    g2_val = ev(g2).real

    def log_g(x: Field) -> np.ndarray:
        return ev(apply_field(x, g2)) / (2 * g2_val)

    worst = 0.0
    for i, j, k in product(range(m), repeat=3):
        if i == j:
            continue
        lhs = ev(apply_field(tangent[j], pair_drho(bracket(tangent[i], conj[k]), rho))) - ev(
            apply_field(tangent[i], pair_drho(bracket(tangent[j], conj[k]), rho))
        )
        a_ji = coefficients(tangent[j], tangent[i])
        a_ik = coefficients(tangent[i], conj[k])
        a_jk = coefficients(tangent[j], conj[k])
        rhs = log_g(tangent[j]) * c_val(tangent[i], conj[k]) - log_g(tangent[i]) * c_val(tangent[j], conj[k])
        for s, e in enumerate(letters):
            rhs = rhs + a_ji[..., s] * c_val(e, conj[k])
            rhs = rhs - a_ik[..., s] * c_val(tangent[j], e) + a_jk[..., s] * c_val(tangent[i], e)
        defect = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))
        worst = max(worst, float(defect.max()))
    return worst


# -- frame providers ---------------------------------------------------------------


class FrameProvider:
    """
    Frame used at (p, δ): canonical, Levi-eigen at p, or orthonormalized at (p, δ).

    Every kind is a constant recombination of the canonical frame.
    """

    KINDS = ("canonical", "levi_eigen", "orthonormal")

    def __init__(self, domain: ModelDomain, kind: str = "canonical", M: Optional[int] = None):
        if kind not in self.KINDS:
            raise WeightError(f"Unknown frame provider {kind!r}; expected one of {', '.join(self.KINDS)}")
        self.domain = domain
        self.kind = kind
        self.M = M or domain.M
        self._canonical: Optional[Frame] = None
        self._cache: Dict[Tuple[Any, ...], Frame] = {}

    @property
    def canonical(self) -> Frame:
        if self._canonical is None:
            self._canonical = tangent_frame(self.domain)
        return self._canonical

    def __call__(self, p: Sequence[complex], delta: float) -> Frame:
        if self.kind == "canonical":
            return self.canonical
        pts = np.asarray(p, dtype=complex)
        key = (self.kind, tuple(np.round(pts, 12)), round(float(delta), 15) if self.kind == "orthonormal" else None)
        if key not in self._cache:
            if self.kind == "levi_eigen":
                self._cache[key] = levi_eigen_frame(self.domain, pts)
            else:
                self._cache[key] = orthonormalize(self.canonical, pts, delta, self.M)
        return self._cache[key]


def make_frame_provider(domain: ModelDomain, kind: str = "canonical", M: Optional[int] = None) -> FrameProvider:
    return FrameProvider(domain, kind, M)


FrameSource = Union[Frame, Callable[[np.ndarray, float], Frame]]


def resolve_frame(source: FrameSource, p: Sequence[complex], delta: float) -> Frame:
    """A fixed frame, or the provider's frame at (p, δ)."""
    return source if isinstance(source, Frame) else source(np.asarray(p, dtype=complex), delta)
