"""
Complex vector fields with smooth-expression coefficients.

A Field is sum_j holo_j d/dz_j + sum_j anti_j d/dconj(z_j). Type (1,0)
fields have identically zero anti coefficients.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .expr import JetArgs, Poly, SmoothExpr, add, as_expr, mul, scale, zero
from .jets import Jet
from .poly import CPoly


class Field:
    """First-order differential operator in (z, conj z)."""

    __slots__ = ("n", "holo", "anti")

    def __init__(self, holo: Sequence[SmoothExpr], anti: Optional[Sequence[SmoothExpr]] = None):
        self.n = len(holo)
        self.holo: Tuple[SmoothExpr, ...] = tuple(holo)
        self.anti: Tuple[SmoothExpr, ...] = tuple(anti) if anti is not None else tuple(zero(self.n) for _ in range(self.n))
        if len(self.anti) != self.n:
            raise ValueError("holo and anti coefficient lists differ in length")

    @classmethod
    def coordinate(cls, n: int, index: int, conjugated: bool = False) -> "Field":
        """d/dz_index or d/dconj(z_index)."""
        coeffs = [zero(n) for _ in range(n)]
        coeffs[index] = Poly(CPoly.constant(n, 1.0))
        if conjugated:
            return cls([zero(n) for _ in range(n)], coeffs)
        return cls(coeffs)

    @classmethod
    def zero_field(cls, n: int) -> "Field":
        return cls([zero(n) for _ in range(n)])

    @property
    def type10(self) -> bool:
        return all(c.is_zero for c in self.anti)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.holo) and all(c.is_zero for c in self.anti)

    def conjugate(self) -> "Field":
        """Swap holo and anti parts with conjugated coefficients."""
        return Field([c.conjugate() for c in self.anti], [c.conjugate() for c in self.holo])

    def __add__(self, other: "Field") -> "Field":
        _check_dims(self, other)
        return Field(
            [add(a, b) for a, b in zip(self.holo, other.holo)],
            [add(a, b) for a, b in zip(self.anti, other.anti)],
        )

    def __sub__(self, other: "Field") -> "Field":
        return self + other.scaled(-1.0)

    def scaled(self, factor: complex) -> "Field":
        return Field([scale(factor, c) for c in self.holo], [scale(factor, c) for c in self.anti])

    def multiplied(self, function: SmoothExpr) -> "Field":
        """Pointwise product f * X."""
        return Field([mul(function, c) for c in self.holo], [mul(function, c) for c in self.anti])

    def __call__(self, f: SmoothExpr) -> SmoothExpr:
        return apply_field(self, f)

    def coefficients_at(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Holo and anti coefficient vectors at points, each of shape (..., n)."""
        pts = np.asarray(points, dtype=complex)
        holo = np.stack([_evaluate(c, pts) for c in self.holo], axis=-1)
        anti = np.stack([_evaluate(c, pts) for c in self.anti], axis=-1)
        return holo, anti

    def coefficient_jets(self, args: JetArgs) -> List[Tuple[int, Jet]]:
        """Nonzero coefficient jets keyed by jet slot (holo slots first, then anti)."""
        out: List[Tuple[int, Jet]] = []
        nv = args.space.nvar
        for j, c in enumerate(self.holo):
            if not c.is_zero:
                out.append((j, c.jet(args)))
        for j, c in enumerate(self.anti):
            if not c.is_zero:
                out.append((nv + j, c.jet(args)))
        return out

    def __repr__(self) -> str:
        return f"Field(holo={list(self.holo)!r}, anti={list(self.anti)!r})"


def _evaluate(expr: SmoothExpr, points: np.ndarray) -> np.ndarray:
    if expr.is_zero:
        return np.zeros(points.shape[:-1], dtype=complex)
    return np.broadcast_to(expr.evaluate(points), points.shape[:-1])


def _check_dims(x: Field, y: Field) -> None:
    if x.n != y.n:
        raise ValueError(f"Field dimension mismatch: {x.n} vs {y.n}")


def apply_field(x: Field, f: SmoothExpr) -> SmoothExpr:
    """X f = sum_j holo_j df/dz_j + sum_j anti_j df/dconj(z_j)."""
    f = as_expr(f, x.n)
    if f.n != x.n:
        raise ValueError(f"Field dimension {x.n} does not match expression dimension {f.n}")
    terms: List[SmoothExpr] = []
    for j in range(x.n):
        if not x.holo[j].is_zero:
            d = f.derive(j)
            if not d.is_zero:
                terms.append(mul(x.holo[j], d))
        if not x.anti[j].is_zero:
            d = f.derive(j, conjugated=True)
            if not d.is_zero:
                terms.append(mul(x.anti[j], d))
    return add(*terms) if terms else zero(x.n)


def bracket(x: Field, y: Field) -> Field:
    """Lie bracket [X, Y] = XY - YX of first-order operators."""
    _check_dims(x, y)
    holo = [add(apply_field(x, y.holo[j]), scale(-1.0, apply_field(y, x.holo[j]))) for j in range(x.n)]
    anti = [add(apply_field(x, y.anti[j]), scale(-1.0, apply_field(y, x.anti[j]))) for j in range(x.n)]
    return Field(holo, anti)


def pair_drho(x: Field, rho: SmoothExpr) -> SmoothExpr:
    """Pairing of the (1,0)-form d rho with the (1,0) part of X."""
    terms = [mul(x.holo[j], rho.derive(j)) for j in range(x.n) if not x.holo[j].is_zero]
    terms = [t for t in terms if not t.is_zero]
    return add(*terms) if terms else zero(x.n)


def combine(fields: Sequence[Field], coefficients: Sequence[complex]) -> Field:
    """Constant-coefficient combination sum_i a_i X_i."""
    if len(fields) != len(coefficients):
        raise ValueError("One coefficient per field is required")
    n = fields[0].n
    result = Field.zero_field(n)
    for field, a in zip(fields, coefficients):
        if a != 0:
            result = result + field.scaled(a)
    return result
