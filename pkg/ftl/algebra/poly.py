"""
Exact complex polynomials in (z_1..z_n, conj(z_1)..conj(z_n)).

A CPoly stores a sparse map from exponent pairs (alpha, beta) to complex
coefficients; alpha counts powers of z and beta powers of conj(z).
Exponents are exact integers, coefficients are double-precision complex.
"""

import math
from itertools import product as iter_product
from typing import TYPE_CHECKING, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

if TYPE_CHECKING:
    from .jets import Jet

MultiIndex = Tuple[int, ...]
Exponent = Tuple[MultiIndex, MultiIndex]
Scalar = Union[int, float, complex]


class CPoly:
    """
    Polynomial in z and conj(z) with complex coefficients.

    Instances are immutable: every operation returns a new CPoly. Exact zero
    coefficients are dropped on construction so that identically vanishing
    results have an empty term map.
    """

    __slots__ = ("n", "terms", "_real")

    def __init__(
        self,
        n: int,
        terms: Optional[Dict[Exponent, Scalar]] = None,
        real_valued: Optional[bool] = None,
    ):
        if n < 1:
            raise ValueError(f"Polynomial dimension must be positive, got {n}")
        self.n = n
        clean: Dict[Exponent, complex] = {}
        for (alpha, beta), coeff in (terms or {}).items():
            if len(alpha) != n or len(beta) != n:
                raise ValueError(f"Exponent {(alpha, beta)} does not match dimension {n}")
            value = complex(coeff)
            if value != 0:
                clean[(tuple(alpha), tuple(beta))] = value
        self.terms = clean
        self._real = real_valued

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "CPoly":
        return cls(n, {}, real_valued=True)

    @classmethod
    def constant(cls, n: int, value: Scalar) -> "CPoly":
        zero = (0,) * n
        return cls(n, {(zero, zero): value})

    @classmethod
    def variable(cls, n: int, index: int, conjugated: bool = False) -> "CPoly":
        """The coordinate z_index (0-based) or its conjugate."""
        if not 0 <= index < n:
            raise ValueError(f"Variable index {index} outside dimension {n}")
        unit = tuple(1 if k == index else 0 for k in range(n))
        zero = (0,) * n
        exponent = (zero, unit) if conjugated else (unit, zero)
        return cls(n, {exponent: 1.0})

    @classmethod
    def modulus_squared(cls, n: int, index: int) -> "CPoly":
        unit = tuple(1 if k == index else 0 for k in range(n))
        return cls(n, {(unit, unit): 1.0}, real_valued=True)

    # -- basic properties -------------------------------------------------

    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(a) + sum(b) for a, b in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def real_valued(self) -> bool:
        if self._real is None:
            self._real = self.is_real_valued()
        return self._real

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        """Check coeff(alpha, beta) == conj(coeff(beta, alpha)) for every term."""
        for (alpha, beta), coeff in self.terms.items():
            partner = self.terms.get((beta, alpha), 0.0)
            if abs(coeff - partner.conjugate()) > tol * max(1.0, abs(coeff)):
                return False
        return True

    def coefficient(self, alpha: Sequence[int], beta: Sequence[int]) -> complex:
        return self.terms.get((tuple(alpha), tuple(beta)), 0j)

    def depends_on(self, index: int) -> bool:
        return any(a[index] or b[index] for a, b in self.terms)

    def __iter__(self) -> Iterator[Tuple[Exponent, complex]]:
        return iter(self.terms.items())

    def __len__(self) -> int:
        return len(self.terms)

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other: Union["CPoly", Scalar]) -> "CPoly":
        if isinstance(other, CPoly):
            if other.n != self.n:
                raise ValueError(f"Dimension mismatch: {self.n} vs {other.n}")
            return other
        return CPoly.constant(self.n, other)

    def __add__(self, other: Union["CPoly", Scalar]) -> "CPoly":
        other = self._coerce(other)
        terms = dict(self.terms)
        for key, coeff in other.terms.items():
            terms[key] = terms.get(key, 0j) + coeff
        return CPoly(self.n, terms)

    __radd__ = __add__

    def __neg__(self) -> "CPoly":
        return CPoly(self.n, {k: -c for k, c in self.terms.items()}, real_valued=self._real)

    def __sub__(self, other: Union["CPoly", Scalar]) -> "CPoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Scalar) -> "CPoly":
        return self._coerce(other) - self

    def __mul__(self, other: Union["CPoly", Scalar]) -> "CPoly":
        if not isinstance(other, CPoly):
            value = complex(other)
            real = self._real if value.imag == 0 else None
            return CPoly(self.n, {k: c * value for k, c in self.terms.items()}, real_valued=real)
        other = self._coerce(other)
        terms: Dict[Exponent, complex] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (
                    tuple(x + y for x, y in zip(a1, a2)),
                    tuple(x + y for x, y in zip(b1, b2)),
                )
                terms[key] = terms.get(key, 0j) + c1 * c2
        return CPoly(self.n, terms)

    __rmul__ = __mul__

    def __truediv__(self, value: Scalar) -> "CPoly":
        return self * (1.0 / complex(value))

    def __pow__(self, power: int) -> "CPoly":
        if power < 0:
            raise ValueError("Negative powers are not polynomials")
        result = CPoly.constant(self.n, 1.0)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def conjugate(self) -> "CPoly":
        return CPoly(
            self.n,
            {(b, a): c.conjugate() for (a, b), c in self.terms.items()},
            real_valued=self._real,
        )

    def real_part(self) -> "CPoly":
        return (self + self.conjugate()) * 0.5

    def imag_part(self) -> "CPoly":
        return (self - self.conjugate()) * (-0.5j)

    def allclose(self, other: "CPoly", tol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= tol for c in diff.terms.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CPoly):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.terms.items())))

    # -- calculus ---------------------------------------------------------

    def derive(self, index: int, conjugated: bool = False) -> "CPoly":
        """Exact partial derivative with respect to z_index or conj(z_index)."""
        if not 0 <= index < self.n:
            raise ValueError(f"Variable index {index} outside dimension {self.n}")
        terms: Dict[Exponent, complex] = {}
        for (alpha, beta), coeff in self.terms.items():
            source = beta if conjugated else alpha
            power = source[index]
            if power == 0:
                continue
            lowered = tuple(p - 1 if k == index else p for k, p in enumerate(source))
            key = (alpha, lowered) if conjugated else (lowered, beta)
            terms[key] = terms.get(key, 0j) + coeff * power
        return CPoly(self.n, terms)

    def derivative(self, alpha: Sequence[int], beta: Sequence[int]) -> "CPoly":
        """Mixed derivative D^{alpha beta} = d^alpha/dz^alpha d^beta/dconj(z)^beta."""
        result = self
        for index, power in enumerate(alpha):
            for _ in range(power):
                result = result.derive(index)
        for index, power in enumerate(beta):
            for _ in range(power):
                result = result.derive(index, conjugated=True)
        return result

    def holomorphic_part(self) -> "CPoly":
        zero = (0,) * self.n
        return CPoly(self.n, {k: c for k, c in self.terms.items() if k[1] == zero})

    def truncate(self, max_degree: int) -> "CPoly":
        return CPoly(
            self.n,
            {k: c for k, c in self.terms.items() if sum(k[0]) + sum(k[1]) <= max_degree},
        )

    def homogeneous_part(self, degree: int) -> "CPoly":
        return CPoly(
            self.n,
            {k: c for k, c in self.terms.items() if sum(k[0]) + sum(k[1]) == degree},
        )

    # -- evaluation -------------------------------------------------------

    def evaluate(self, points: Union[np.ndarray, Sequence[complex]]) -> np.ndarray:
        """
        Evaluate at one or many points.

        Args:
            points: Array of shape (n,) or (..., n) of complex coordinates

        Returns:
            Complex array of shape () or (...)
        """
        z = np.asarray(points, dtype=complex)
        if z.shape[-1] != self.n:
            raise ValueError(f"Points have {z.shape[-1]} coordinates, polynomial has {self.n}")
        zbar = np.conj(z)
        result = np.zeros(z.shape[:-1], dtype=complex)
        for (alpha, beta), coeff in self.terms.items():
            term = np.full(z.shape[:-1], coeff, dtype=complex)
            for k in range(self.n):
                if alpha[k]:
                    term = term * z[..., k] ** alpha[k]
                if beta[k]:
                    term = term * zbar[..., k] ** beta[k]
            result = result + term
        return result

    def __call__(self, points: Union[np.ndarray, Sequence[complex]]) -> np.ndarray:
        return self.evaluate(points)

    def derivative_at(self, alpha: Sequence[int], beta: Sequence[int], point: Sequence[complex]) -> complex:
        return complex(self.derivative(alpha, beta).evaluate(np.asarray(point, dtype=complex)))

    def taylor_coefficients(self, point: Sequence[complex], max_degree: Optional[int] = None) -> "CPoly":
        """
        Re-expand around a point: returns Q with Q(w) = self(point + w).

        The shift is exact: each monomial is expanded binomially.
        """
        p = np.asarray(point, dtype=complex)
        pbar = np.conj(p)
        terms: Dict[Exponent, complex] = {}
        for (alpha, beta), coeff in self.terms.items():
            ranges = [range(a + 1) for a in alpha] + [range(b + 1) for b in beta]
            for sub in iter_product(*ranges):
                gamma, eta = sub[: self.n], sub[self.n :]
                if max_degree is not None and sum(gamma) + sum(eta) > max_degree:
                    continue
                factor = coeff
                for k in range(self.n):
                    factor *= math.comb(alpha[k], gamma[k]) * p[k] ** (alpha[k] - gamma[k])
                    factor *= math.comb(beta[k], eta[k]) * pbar[k] ** (beta[k] - eta[k])
                key = (tuple(gamma), tuple(eta))
                terms[key] = terms.get(key, 0j) + factor
        return CPoly(self.n, terms)

    # -- composition ------------------------------------------------------

    def compose(self, components: Sequence["CPoly"], max_degree: Optional[int] = None) -> "CPoly":
        """
        Substitute z_k -> components[k] (and conj(z_k) -> conj(components[k])).

        With max_degree, every intermediate product is truncated, which
        leaves the terms of degree <= max_degree exact.
        """
        if len(components) != self.n:
            raise ValueError(f"Expected {self.n} components, got {len(components)}")
        m = components[0].n

        def cut(poly: CPoly) -> CPoly:
            return poly if max_degree is None else poly.truncate(max_degree)

        powers_z: List[List[CPoly]] = [[CPoly.constant(m, 1.0)] for _ in range(self.n)]
        powers_zbar: List[List[CPoly]] = [[CPoly.constant(m, 1.0)] for _ in range(self.n)]
        bases = [cut(c) for c in components]
        conj_bases = [c.conjugate() for c in bases]

        def power(cache: List[CPoly], base: CPoly, k: int) -> CPoly:
            while len(cache) <= k:
                cache.append(cut(cache[-1] * base))
            return cache[k]

        acc: Dict[Exponent, complex] = {}
        for (alpha, beta), coeff in self.terms.items():
            term = CPoly.constant(m, coeff)
            for k in range(self.n):
                if alpha[k]:
                    term = cut(term * power(powers_z[k], bases[k], alpha[k]))
                if beta[k]:
                    term = cut(term * power(powers_zbar[k], conj_bases[k], beta[k]))
            for key, value in term.terms.items():
                acc[key] = acc.get(key, 0j) + value
        return CPoly(m, acc)

    def compose_jets(self, z: Sequence["Jet"], zbar: Optional[Sequence["Jet"]] = None) -> "Jet":
        """Evaluate the polynomial on truncated Taylor jets of the coordinates."""
        from .jets import Jet

        if len(z) != self.n:
            raise ValueError(f"Expected {self.n} jet arguments, got {len(z)}")
        if zbar is None:
            zbar = [j.conj() for j in z]
        space, batch = z[0].space, z[0].batch_shape
        powers_z: List[List[Jet]] = [[Jet.constant(space, 1.0, batch)] for _ in range(self.n)]
        powers_zbar: List[List[Jet]] = [[Jet.constant(space, 1.0, batch)] for _ in range(self.n)]

        def power(cache: List[Jet], base: Jet, k: int) -> Jet:
            while len(cache) <= k:
                cache.append(cache[-1] * base)
            return cache[k]

        result = Jet.constant(space, 0.0, batch)
        for (alpha, beta), coeff in self.terms.items():
            term: Optional[Jet] = None
            for k in range(self.n):
                if alpha[k]:
                    factor = power(powers_z[k], z[k], alpha[k])
                    term = factor if term is None else term * factor
                if beta[k]:
                    factor = power(powers_zbar[k], zbar[k], beta[k])
                    term = factor if term is None else term * factor
            if term is None:
                result = result + coeff
            else:
                result = result + term * coeff
        return result

    # -- presentation -----------------------------------------------------

    def __repr__(self) -> str:
        return f"CPoly(n={self.n}, {self.pretty()})"

    def pretty(self, names: Optional[Sequence[str]] = None) -> str:
        if not self.terms:
            return "0"
        names = names or [f"z{k + 1}" for k in range(self.n)]
        parts = []
        for (alpha, beta), coeff in sorted(self.terms.items()):
            factors = []
            for k in range(self.n):
                if alpha[k]:
                    factors.append(names[k] + (f"^{alpha[k]}" if alpha[k] > 1 else ""))
                if beta[k]:
                    factors.append(f"conj({names[k]})" + (f"^{beta[k]}" if beta[k] > 1 else ""))
            coeff_text = f"{coeff.real:g}" if coeff.imag == 0 else f"({coeff:g})"
            parts.append("*".join([coeff_text] + factors) if factors else coeff_text)
        return " + ".join(parts)


def monomial(n: int, alpha: Sequence[int], beta: Sequence[int], coeff: Scalar = 1.0) -> CPoly:
    return CPoly(n, {(tuple(alpha), tuple(beta)): coeff})


def sum_polys(n: int, polys: Iterable[CPoly]) -> CPoly:
    result = CPoly.zero(n)
    for poly in polys:
        result = result + poly
    return result


def multi_indices(n: int, max_order: int, min_order: int = 0) -> List[MultiIndex]:
    """All multi-indices of length n with min_order <= |alpha| <= max_order, graded."""
    out: List[MultiIndex] = []
    for total in range(min_order, max_order + 1):
        for combo in _compositions(total, n):
            out.append(combo)
    return out


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
