"""
Iterated Laplacians of nonnegative functions.

For g >= 0 of class C^M near 0 and a derivative D^{α0 β0} with
|α0 + β0| < M, some multi-index a with 2|a| <= |α0 + β0| satisfies

    (prod Δ_i^{a_i}) g(0) >= |D^{α0 β0} g(0)|^{2^{|α0+β0|}} / C(K1),

where Δ_i = ∂^2/∂z_i∂conj(z_i) and K1 bounds the derivatives of g. The
search below is exhaustive over the finite set of a and reports the implied
constant; a random generator of sums of squared moduli drives the property
sweep.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import CPoly
from .algebra.poly import multi_indices
from .exceptions import ConfigError, DomainError
from .parallel import parallel_map

logger = logging.getLogger("ftl.appendix")

SAMPLE_POINTS = 4096
NONNEG_TOL = 1e-12


def _factorial(multi: Sequence[int]) -> int:
    return math.prod(math.factorial(k) for k in multi)


def _unit_ball(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= rng.random((count, 1)) ** (1.0 / (2 * n))
    return np.vstack([np.zeros((1, n), dtype=complex), z])


def derivative_at_zero(g: CPoly, alpha: Sequence[int], beta: Sequence[int]) -> complex:
    """D^{αβ} g(0) = α! β! c_{αβ}."""
    return _factorial(alpha) * _factorial(beta) * g.coefficient(alpha, beta)


def laplacian_at_zero(g: CPoly, a: Sequence[int]) -> float:
    """(prod Δ_i^{a_i}) g(0) = (a!)^2 c_{aa}."""
    return float(np.real(derivative_at_zero(g, a, a)))


def derivative_bound(g: CPoly, max_order: Optional[int] = None) -> float:
    """
    Sup over the closed unit ball of every |D^{αβ} g| with |α+β| <= max_order.

    Bounded termwise by sum |c| α!/(α-a)! β!/(β-b)!, which the samples never exceed.
    """
    top = g.degree if max_order is None else max_order
    best = 0.0
    for a_order in range(top + 1):
        for split in range(a_order + 1):
            for alpha in multi_indices(g.n, split, split):
                for beta in multi_indices(g.n, a_order - split, a_order - split):
                    total = 0.0
                    for (ea, eb), c in g:
                        if all(x >= y for x, y in zip(ea, alpha)) and all(x >= y for x, y in zip(eb, beta)):
                            total += abs(c) * (_factorial(ea) // _factorial(np.subtract(ea, alpha))) * (
                                _factorial(eb) // _factorial(np.subtract(eb, beta))
                            )
                    best = max(best, total)
    return best


def sampled_derivative_sup(g: CPoly, max_order: int, samples: int = SAMPLE_POINTS, seed: int = 0) -> float:
    """max |D^{αβ} g| over sampled points of the unit ball, |α+β| <= max_order."""
    pts = _unit_ball(g.n, samples, np.random.default_rng(seed))
    best = 0.0
    for order in range(max_order + 1):
        for split in range(order + 1):
            for alpha in multi_indices(g.n, split, split):
                for beta in multi_indices(g.n, order - split, order - split):
                    best = max(best, float(np.abs(g.derivative(alpha, beta).evaluate(pts)).max()))
    return best


def check_nonnegative(g: CPoly, samples: int = SAMPLE_POINTS, seed: int = 0) -> float:
    """
    Minimum of g on sampled points of the unit ball.

    Raises:
        DomainError: If g is negative somewhere on the sample
    """
    values = np.real(g.evaluate(_unit_ball(g.n, samples, np.random.default_rng(seed))))
    lowest = float(values.min())
    scale = max(1.0, float(np.abs(values).max()))
    if lowest < -NONNEG_TOL * scale:
        raise DomainError(f"Function takes the negative value {lowest:.3e} on the unit ball")
    return lowest


@dataclass
class DominationResult:
    """
    Best iterated Laplacian for one derivative.

    `case` is "diagonal" when α0 = β0 and the winner is a = α0 itself,
    "reduced" otherwise.
    """

    alpha0: Tuple[int, ...]
    beta0: Tuple[int, ...]
    a: Tuple[int, ...]
    value: float
    derivative: complex
    target: float
    constant: float
    K1: float
    case: str
    candidates: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    @property
    def order(self) -> int:
        return sum(self.alpha0) + sum(self.beta0)

    @property
    def holds(self) -> bool:
        return self.target == 0 or self.value > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha0": list(self.alpha0),
            "beta0": list(self.beta0),
            "a": list(self.a),
            "value": self.value,
            "derivative": abs(self.derivative),
            "target": self.target,
            "constant": self.constant,
            "K1": self.K1,
            "case": self.case,
        }


def laplacian_domination(
    g: CPoly,
    alpha0: Sequence[int],
    beta0: Sequence[int],
    K1: float,
    M: Optional[int] = None,
    samples: int = SAMPLE_POINTS,
    seed: int = 0,
) -> DominationResult:
    """
    Exhaustive search over a with 2|a| <= |α0 + β0| for the largest (prod Δ^a) g(0).

    Args:
        g: Polynomial, nonnegative on the unit ball
        alpha0: Holomorphic part of the derivative
        beta0: Antiholomorphic part
        K1: Claimed bound of the derivatives of g on the unit ball
        M: Smoothness class; defaults to deg g + 1
        samples: Sample points for the nonnegativity and K1 checks
        seed: Sample seed

    Returns:
        The winning a with C = target / value (infinite when value <= 0 < target)

    Raises:
        DomainError: If g is negative on the sample
        ConfigError: If |α0 + β0| >= M or the sampled derivatives exceed K1
    """
    alpha0, beta0 = tuple(int(x) for x in alpha0), tuple(int(x) for x in beta0)
    order = sum(alpha0) + sum(beta0)
    M = g.degree + 1 if M is None else M
    if order >= M:
        raise ConfigError(f"Derivative order {order} must be below M = {M}")
    check_nonnegative(g, samples, seed)
    measured = sampled_derivative_sup(g, order, min(samples, 512), seed)
    if measured > K1 * (1 + 1e-9):
        raise ConfigError(f"Sampled derivative bound {measured:.6g} exceeds K1 = {K1:.6g}")
    derivative = derivative_at_zero(g, alpha0, beta0)
    target = abs(derivative) ** (2**order)
    candidates: Dict[Tuple[int, ...], float] = {}
    for size in range(order // 2 + 1):
        for a in multi_indices(g.n, size, size):
            candidates[tuple(a)] = laplacian_at_zero(g, a)
    best = max(candidates, key=lambda a: (candidates[a], [-x for x in a]))
    value = candidates[best]
    if target == 0:
        constant = 0.0
    elif value <= 0:
        constant = float("inf")
    else:
        constant = target / value
    case = "diagonal" if alpha0 == beta0 and best == alpha0 else "reduced"
    return DominationResult(alpha0, beta0, best, value, derivative, target, constant, K1, case, candidates)


def random_nonneg_poly(seed: int, degree: int, j: int, terms: int = 2, monomials: int = 3) -> Tuple[CPoly, float]:
    """
    sum_k |h_k|^2 for random polynomials h_k in (z, conj z) of degree <= degree/2 without constant term.

    Returns:
        (g, K1) with K1 the termwise bound of every derivative on the unit ball

    Raises:
        ConfigError: If degree is odd or below 2
    """
    if degree % 2 or degree < 2:
        raise ConfigError(f"Degree must be even and at least 2, got {degree}")
    rng = np.random.default_rng(seed)
    half = degree // 2
    pool = [(a, b) for total in range(1, half + 1) for split in range(total + 1)
            for a in multi_indices(j, split, split) for b in multi_indices(j, total - split, total - split)]
    g = CPoly.zero(j)
    for _ in range(terms):
        picks = rng.choice(len(pool), size=min(monomials, len(pool)), replace=False)
        coeffs = rng.standard_normal(len(picks)) + 1j * rng.standard_normal(len(picks))
        h = CPoly(j, {pool[k]: c for k, c in zip(picks, coeffs)})
        g = g + h * h.conjugate()
    g = CPoly(j, g.terms, real_valued=True)
    return g, derivative_bound(g)


def sum_of_squares(hs: Sequence[CPoly]) -> CPoly:
    """sum |h|^2."""
    n = hs[0].n
    g = CPoly.zero(n)
    for h in hs:
        g = g + h * h.conjugate()
    return CPoly(n, g.terms, real_valued=True)


def is_radial(g: CPoly) -> bool:
    """Only |z^α|^2 monomials: g is radial in each slot."""
    return all(alpha == beta for (alpha, beta), _ in g)


def derivative_pairs(n: int, max_order: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """All (α0, β0) with 1 <= |α0 + β0| <= max_order."""
    out = []
    for order in range(1, max_order + 1):
        for split in range(order + 1):
            for alpha in multi_indices(n, split, split):
                for beta in multi_indices(n, order - split, order - split):
                    out.append((tuple(alpha), tuple(beta)))
    return out


@dataclass
class CorpusCase:
    seed: int
    degree: int
    j: int
    K1: float
    checked: int
    violations: int
    max_constant: float


def _corpus_case(seed: int, max_degree: int, max_j: int, max_order: int) -> CorpusCase:
    rng = np.random.default_rng(seed)
    degree = 2 * int(rng.integers(1, max_degree // 2 + 1))
    j = int(rng.integers(1, max_j + 1))
    g, K1 = random_nonneg_poly(seed, degree, j)
    checked = violations = 0
    worst = 0.0
    for alpha0, beta0 in derivative_pairs(j, max_order):
        if sum(alpha0) + sum(beta0) > g.degree or derivative_at_zero(g, alpha0, beta0) == 0:
            continue
        result = laplacian_domination(g, alpha0, beta0, K1, M=max(g.degree, max_order) + 1, samples=256, seed=seed)
        checked += 1
        if not result.holds:
            violations += 1
        worst = max(worst, result.constant)
    return CorpusCase(seed, degree, j, K1, checked, violations, worst)


@dataclass
class CorpusReport:
    """Sweep of the search over generated functions, constants bucketed by decade of K1."""

    cases: List[CorpusCase]

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.cases)

    @property
    def checked(self) -> int:
        return sum(c.checked for c in self.cases)

    def buckets(self) -> Dict[int, float]:
        out: Dict[int, float] = {}
        for c in self.cases:
            if c.checked == 0:
                continue
            key = int(math.floor(math.log10(c.K1))) if c.K1 > 0 else 0
            out[key] = max(out.get(key, 0.0), c.max_constant)
        return dict(sorted(out.items()))

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"seed": c.seed, "degree": c.degree, "j": c.j, "K1": c.K1, "checked": c.checked,
             "violations": c.violations, "max_constant": c.max_constant}
            for c in self.cases
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cases": len(self.cases),
            "checked": self.checked,
            "violations": self.violations,
            "buckets": {f"1e{k}": v for k, v in self.buckets().items()},
        }


def corpus_sweep(
    count: int = 200,
    max_degree: int = 8,
    max_j: int = 2,
    max_order: int = 4,
    seed: int = 0,
    jobs: Optional[int] = 1,
) -> CorpusReport:
    """Run the search on `count` generated functions (seeds seed..seed+count-1)."""
    work = partial(_corpus_case, max_degree=max_degree, max_j=max_j, max_order=max_order)
    cases = parallel_map(work, range(seed, seed + count), jobs)
    report = CorpusReport(cases)
    if report.violations:
        logger.warning(f"{report.violations} derivatives without a positive iterated Laplacian")
    logger.info(f"Corpus sweep: {report.checked} derivatives over {count} functions")
    return report

