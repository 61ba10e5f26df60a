"""
Closed-form smooth expressions with exact derivative rules.

Node kinds: Poly, Exp, BumpPhi, RecipSqrt, Sum, Product and Scale. Every
node can be differentiated symbolically, conjugated, evaluated on arrays of
points and expanded into a truncated Taylor jet. Simplification is limited
to merging polynomial parts of sums and products and dropping zeros.
"""

from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from .jets import Jet, JetSpace
from .poly import CPoly

Scalar = Union[int, float, complex]

# exp(-u) underflows to zero well before this
_BUMP_CUTOFF = 745.0


class JetArgs:
    """Jets of the coordinates (and their conjugates) at which expressions are expanded."""

    def __init__(self, z: Sequence[Jet], zbar: Sequence[Jet] = ()):
        self.z = list(z)
        self.zbar = list(zbar) if zbar else [j.conj() for j in self.z]
        self.memo: Dict[int, Tuple["SmoothExpr", Jet]] = {}

    @classmethod
    def at_points(cls, space: JetSpace, points: np.ndarray) -> "JetArgs":
        return cls(Jet.coordinates(space, points))

    @property
    def space(self) -> JetSpace:
        return self.z[0].space

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.z[0].batch_shape


class SmoothExpr:
    """Base class of expression nodes; instances are immutable."""

    n: int

    def derive(self, index: int, conjugated: bool = False) -> "SmoothExpr":
        raise NotImplementedError

    def conjugate(self) -> "SmoothExpr":
        raise NotImplementedError

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jet(self, args: JetArgs) -> Jet:
        raise NotImplementedError

    def jet(self, args: JetArgs) -> Jet:
        """Taylor jet of this expression composed with the argument jets (memoized per args)."""
        key = id(self)
        cached = args.memo.get(key)
        if cached is not None:
            return cached[1]
        result = self._jet(args)
        args.memo[key] = (self, result)
        return result

    @property
    def is_zero(self) -> bool:
        return False

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.evaluate(points)

    def __add__(self, other: "SmoothExpr") -> "SmoothExpr":
        return add(self, as_expr(other, self.n))

    def __radd__(self, other: Scalar) -> "SmoothExpr":
        return add(as_expr(other, self.n), self)

    def __sub__(self, other: "SmoothExpr") -> "SmoothExpr":
        return add(self, scale(-1.0, as_expr(other, self.n)))

    def __neg__(self) -> "SmoothExpr":
        return scale(-1.0, self)

    def __mul__(self, other: Union["SmoothExpr", Scalar]) -> "SmoothExpr":
        if isinstance(other, SmoothExpr):
            return mul(self, other)
        return scale(other, self)

    def __rmul__(self, other: Scalar) -> "SmoothExpr":
        return scale(other, self)


class Poly(SmoothExpr):
    """Polynomial leaf."""

    def __init__(self, poly: CPoly):
        self.poly = poly
        self.n = poly.n

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        return Poly(self.poly.derive(index, conjugated))

    def conjugate(self) -> SmoothExpr:
        return Poly(self.poly.conjugate())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.poly.evaluate(points)

    def _jet(self, args: JetArgs) -> Jet:
        return self.poly.compose_jets(args.z, args.zbar)

    def __repr__(self) -> str:
        return f"Poly({self.poly.pretty()})"


class Scale(SmoothExpr):
    def __init__(self, factor: Scalar, child: SmoothExpr):
        self.factor = complex(factor)
        self.child = child
        self.n = child.n

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        return scale(self.factor, self.child.derive(index, conjugated))

    def conjugate(self) -> SmoothExpr:
        return scale(self.factor.conjugate(), self.child.conjugate())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.factor * self.child.evaluate(points)

    def _jet(self, args: JetArgs) -> Jet:
        return self.child.jet(args) * self.factor

    def __repr__(self) -> str:
        return f"Scale({self.factor}, {self.child!r})"


class Exp(SmoothExpr):
    def __init__(self, child: SmoothExpr):
        self.child = child
        self.n = child.n

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        return mul(self.child.derive(index, conjugated), self)

    def conjugate(self) -> SmoothExpr:
        return Exp(self.child.conjugate())

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.exp(self.child.evaluate(points))

    def _jet(self, args: JetArgs) -> Jet:
        return self.child.jet(args).exp()

    def __repr__(self) -> str:
        return f"Exp({self.child!r})"


class BumpPhi(SmoothExpr):
    """
    k-th derivative of the flat bump x -> K0 exp(-1/(x - mu^2)), composed with a child.

    The child is expected to be real-valued; its real part is used.
    """

    def __init__(self, mu: float, k0: float, child: SmoothExpr, order: int = 0):
        self.mu = float(mu)
        self.k0 = float(k0)
        self.child = child
        self.order = order
        self.n = child.n

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        return mul(self.child.derive(index, conjugated), BumpPhi(self.mu, self.k0, self.child, self.order + 1))

    def conjugate(self) -> SmoothExpr:
        return BumpPhi(self.mu, self.k0, self.child.conjugate(), self.order)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = np.real(self.child.evaluate(points))
        return bump_derivative(self.mu, self.k0, x, self.order).astype(complex)

    def _jet(self, args: JetArgs) -> Jet:
        inner = self.child.jet(args)
        return inner.compose(
            lambda x0, j: bump_derivative(self.mu, self.k0, np.real(x0), self.order + j).astype(complex)
        )

    def __repr__(self) -> str:
        return f"BumpPhi(mu={self.mu}, K0={self.k0}, order={self.order}, {self.child!r})"


class RecipSqrt(SmoothExpr):
    """child^(-(2k+1)/2); order k grows under differentiation."""

    def __init__(self, child: SmoothExpr, order: int = 0):
        self.child = child
        self.order = order
        self.n = child.n

    @property
    def exponent(self) -> float:
        return -(2 * self.order + 1) / 2.0

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        inner = self.child.derive(index, conjugated)
        return scale(self.exponent, mul(inner, RecipSqrt(self.child, self.order + 1)))

    def conjugate(self) -> SmoothExpr:
        return RecipSqrt(self.child.conjugate(), self.order)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.power(self.child.evaluate(points).astype(complex), self.exponent)

    def _jet(self, args: JetArgs) -> Jet:
        return self.child.jet(args).power(self.exponent)

    def __repr__(self) -> str:
        return f"RecipSqrt(order={self.order}, {self.child!r})"


class Sum(SmoothExpr):
    def __init__(self, children: Sequence[SmoothExpr]):
        self.children = tuple(children)
        self.n = self.children[0].n

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        return add(*[c.derive(index, conjugated) for c in self.children])

    def conjugate(self) -> SmoothExpr:
        return add(*[c.conjugate() for c in self.children])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        total = self.children[0].evaluate(points)
        for child in self.children[1:]:
            total = total + child.evaluate(points)
        return total

    def _jet(self, args: JetArgs) -> Jet:
        total = self.children[0].jet(args)
        for child in self.children[1:]:
            total = total + child.jet(args)
        return total

    def __repr__(self) -> str:
        return "Sum(" + ", ".join(repr(c) for c in self.children) + ")"


class Product(SmoothExpr):
    def __init__(self, children: Sequence[SmoothExpr]):
        self.children = tuple(children)
        self.n = self.children[0].n

    def derive(self, index: int, conjugated: bool = False) -> SmoothExpr:
        terms: List[SmoothExpr] = []
        for i, child in enumerate(self.children):
            d = child.derive(index, conjugated)
            if d.is_zero:
                continue
            terms.append(mul(*(self.children[:i] + (d,) + self.children[i + 1 :])))
        return add(*terms) if terms else zero(self.n)

    def conjugate(self) -> SmoothExpr:
        return mul(*[c.conjugate() for c in self.children])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        total = self.children[0].evaluate(points)
        for child in self.children[1:]:
            total = total * child.evaluate(points)
        return total

    def _jet(self, args: JetArgs) -> Jet:
        total = self.children[0].jet(args)
        for child in self.children[1:]:
            total = total * child.jet(args)
        return total

    def __repr__(self) -> str:
        return "Product(" + ", ".join(repr(c) for c in self.children) + ")"


# -- constructors with light simplification ----------------------------------


def zero(n: int) -> Poly:
    return Poly(CPoly.zero(n))


def constant(n: int, value: Scalar) -> Poly:
    return Poly(CPoly.constant(n, value))


def as_expr(value: Union[SmoothExpr, CPoly, Scalar], n: int) -> SmoothExpr:
    if isinstance(value, SmoothExpr):
        return value
    if isinstance(value, CPoly):
        return Poly(value)
    return constant(n, value)


def scale(factor: Scalar, expr: SmoothExpr) -> SmoothExpr:
    factor = complex(factor)
    if factor == 0 or expr.is_zero:
        return zero(expr.n)
    if factor == 1:
        return expr
    if isinstance(expr, Poly):
        return Poly(expr.poly * factor)
    if isinstance(expr, Scale):
        return scale(factor * expr.factor, expr.child)
    return Scale(factor, expr)


def add(*exprs: SmoothExpr) -> SmoothExpr:
    if not exprs:
        raise ValueError("add() needs at least one expression")
    n = exprs[0].n
    poly = CPoly.zero(n)
    others: List[SmoothExpr] = []
    stack = list(exprs)
    while stack:
        e = stack.pop(0)
        if isinstance(e, Sum):
            stack = list(e.children) + stack
        elif isinstance(e, Poly):
            poly = poly + e.poly
        elif not e.is_zero:
            others.append(e)
    if not others:
        return Poly(poly)
    parts = ([Poly(poly)] if not poly.is_zero else []) + others
    return parts[0] if len(parts) == 1 else Sum(parts)


def mul(*exprs: SmoothExpr) -> SmoothExpr:
    if not exprs:
        raise ValueError("mul() needs at least one expression")
    n = exprs[0].n
    poly = CPoly.constant(n, 1.0)
    factor = 1.0 + 0j
    others: List[SmoothExpr] = []
    stack = list(exprs)
    while stack:
        e = stack.pop(0)
        if e.is_zero:
            return zero(n)
        if isinstance(e, Product):
            stack = list(e.children) + stack
        elif isinstance(e, Poly):
            poly = poly * e.poly
        elif isinstance(e, Scale):
            factor *= e.factor
            stack.insert(0, e.child)
        else:
            others.append(e)
    if poly.is_zero:
        return zero(n)
    if not others:
        return Poly(poly * factor)
    head = poly * factor
    if head == CPoly.constant(n, 1.0):
        return others[0] if len(others) == 1 else Product(others)
    if len(head) == 1 and head.degree == 0:
        inner = others[0] if len(others) == 1 else Product(others)
        return scale(head.coefficient((0,) * n, (0,) * n), inner)
    return Product([Poly(head)] + others)


def derive(expr: SmoothExpr, index: int, conjugated: bool = False) -> SmoothExpr:
    """Exact partial derivative of an expression with respect to z_index or its conjugate."""
    if not 0 <= index < expr.n:
        raise ValueError(f"Variable index {index} outside dimension {expr.n}")
    return expr.derive(index, conjugated)


def reciprocal(expr: SmoothExpr) -> SmoothExpr:
    """1/expr as the square of expr^(-1/2)."""
    root = RecipSqrt(expr)
    return Product([root, root])


# -- the flat bump --------------------------------------------------------------


@lru_cache(maxsize=None)
def bump_polynomial(order: int) -> Polynomial:
    """R_k with phi^(k)(x) = K0 exp(-u) R_k(u), u = 1/(x - mu^2); R_{k+1} = u^2 (R_k - R_k')."""
    if order == 0:
        return Polynomial([1.0])
    previous = bump_polynomial(order - 1)
    return Polynomial([0.0, 0.0, 1.0]) * (previous - previous.deriv())


def bump_derivative(mu: float, k0: float, x: Union[float, np.ndarray], order: int = 0) -> np.ndarray:
    """
    Closed-form k-th derivative of K0 exp(-1/(x - mu^2)), zero for x <= mu^2.

    Args:
        mu: Bump radius; the flat region is x <= mu^2
        k0: Amplitude K0
        x: Argument (real, scalar or array)
        order: Derivative order k

    Returns:
        Real array of phi^(k)(x)
    """
    x_arr = np.asarray(x, dtype=float)
    t = x_arr - mu * mu
    out = np.zeros_like(x_arr, dtype=float)
    active = t > 1.0 / _BUMP_CUTOFF
    if np.any(active):
        u = 1.0 / t[active]
        out[active] = k0 * np.exp(-u) * bump_polynomial(order)(u)
    return out


def modulus_squared_expr(n: int, center: Sequence[complex] = ()) -> Poly:
    """|z - center|^2 as a polynomial expression."""
    c = np.zeros(n, dtype=complex) if len(center) == 0 else np.asarray(center, dtype=complex)
    total = CPoly.zero(n)
    for k in range(n):
        shifted = CPoly.variable(n, k) - complex(c[k])
        total = total + shifted * shifted.conjugate()
    return Poly(total)
