"""
Truncated multivariate Taylor jets.

A jet of order D at a point q stores the coefficients of
f(q + w) = sum c_{alpha beta} w^alpha conj(w)^beta over all monomials with
|alpha| + |beta| <= D, treating w and conj(w) as independent variables.
Coefficients are laid out in graded order, so truncating to a lower order
is a prefix slice. Arithmetic is batched over leading axes.
"""

import math
from functools import cached_property, lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

ArrayLike = Union[float, complex, np.ndarray]


class JetSpace:
    """Graded monomial basis for jets in `nvar` complex variables up to `order`."""

    def __init__(self, nvar: int, order: int):
        if nvar < 1 or order < 0:
            raise ValueError(f"Invalid jet space ({nvar}, {order})")
        self.nvar = nvar
        self.order = order
        slots = 2 * nvar
        rows = []
        for degree in range(order + 1):
            for combo in combinations_with_replacement(range(slots), degree):
                rows.append(np.bincount(np.asarray(combo, dtype=int), minlength=slots))
        self.exponents = np.asarray(rows, dtype=np.int64).reshape(-1, slots)
        self.degrees = self.exponents.sum(axis=1)
        self.dim = len(self.exponents)
        # prefix length for each truncation order
        self.sizes = np.searchsorted(self.degrees, np.arange(order + 1), side="right")
        self._weights = (order + 1) ** np.arange(slots, dtype=np.int64)
        codes = self.exponents @ self._weights
        self._sorter = np.argsort(codes)
        self._sorted_codes = codes[self._sorter]
        self._derivative_maps: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"JetSpace(nvar={self.nvar}, order={self.order}, dim={self.dim})"

    def index(self, exponents: np.ndarray) -> np.ndarray:
        """Position of each exponent row, or -1 when outside the space."""
        exps = np.asarray(exponents, dtype=np.int64)
        valid = (exps >= 0).all(axis=-1) & (exps.sum(axis=-1) <= self.order)
        valid &= (exps <= self.order).all(axis=-1)
        codes = np.where(valid, exps @ self._weights, 0)
        pos = np.clip(np.searchsorted(self._sorted_codes, codes), 0, self.dim - 1)
        found = valid & (self._sorted_codes[pos] == codes)
        return np.where(found, self._sorter[pos], -1)

    def slot(self, variable: int, conjugated: bool = False) -> int:
        return variable + (self.nvar if conjugated else 0)

    def monomial_index(self, alpha: Sequence[int], beta: Sequence[int]) -> int:
        return int(self.index(np.asarray(list(alpha) + list(beta))[None, :])[0])

    @cached_property
    def product_table(self) -> Tuple[np.ndarray, np.ndarray, sparse.csr_matrix]:
        """Index pairs (I, J) with deg I + deg J <= order and the scatter onto I + J."""
        left, right = np.nonzero(self.degrees[:, None] + self.degrees[None, :] <= self.order)
        target = self.index(self.exponents[left] + self.exponents[right])
        scatter = sparse.csr_matrix(
            (np.ones(len(left)), (target, np.arange(len(left)))),
            shape=(self.dim, len(left)),
        )
        return left, right, scatter

    @cached_property
    def conjugation(self) -> np.ndarray:
        swapped = np.concatenate(
            [self.exponents[:, self.nvar :], self.exponents[:, : self.nvar]], axis=1
        )
        return self.index(swapped)

    def derivative_map(self, slot: int) -> Tuple[np.ndarray, np.ndarray]:
        """Source indices and factors for d/dw_slot, landing in the order-1 space."""
        if slot in self._derivative_maps:
            return self._derivative_maps[slot]
        if self.order == 0:
            raise ValueError("Cannot differentiate an order-0 jet")
        lower = get_space(self.nvar, self.order - 1)
        shifted = lower.exponents.copy()
        shifted[:, slot] += 1
        entry = (self.index(shifted), (lower.exponents[:, slot] + 1).astype(float))
        self._derivative_maps[slot] = entry
        return entry

    # -- raw coefficient kernels -----------------------------------------

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Truncated product of coefficient arrays (..., dim), with broadcasting."""
        left, right, scatter = self.product_table
        pairs = a[..., left] * b[..., right]
        shape = pairs.shape[:-1]
        flat = pairs.reshape(-1, pairs.shape[-1])
        out = np.asarray(scatter @ flat.T).T
        return out.reshape(shape + (self.dim,))

    def differentiate(self, a: np.ndarray, slot: int) -> np.ndarray:
        source, factor = self.derivative_map(slot)
        return a[..., source] * factor

    def conjugate(self, a: np.ndarray) -> np.ndarray:
        return np.conj(a[..., self.conjugation])


@lru_cache(maxsize=64)
def get_space(nvar: int, order: int) -> JetSpace:
    return JetSpace(nvar, order)


class Jet:
    """Batched truncated Taylor jet living in a JetSpace."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[-1] != space.dim:
            raise ValueError(f"Coefficient axis {coeffs.shape[-1]} != space dim {space.dim}")
        self.space = space
        self.coeffs = coeffs

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, value: ArrayLike, batch_shape: Tuple[int, ...] = ()) -> "Jet":
        value = np.broadcast_to(np.asarray(value, dtype=complex), batch_shape)
        coeffs = np.zeros(batch_shape + (space.dim,), dtype=complex)
        coeffs[..., 0] = value
        return cls(space, coeffs)

    @classmethod
    def coordinates(cls, space: JetSpace, points: np.ndarray) -> List["Jet"]:
        """Jets of z_k at the given points: z_k = q_k + w_k."""
        pts = np.asarray(points, dtype=complex)
        if pts.shape[-1] != space.nvar:
            raise ValueError(f"Points have {pts.shape[-1]} coordinates, space has {space.nvar}")
        batch = pts.shape[:-1]
        out = []
        for k in range(space.nvar):
            jet = cls.constant(space, pts[..., k], batch)
            if space.order >= 1:
                jet.coeffs[..., 1 + k] = 1.0
            out.append(jet)
        return out

    # -- properties -------------------------------------------------------

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def coefficient(self, alpha: Sequence[int], beta: Sequence[int]) -> np.ndarray:
        idx = self.space.monomial_index(alpha, beta)
        if idx < 0:
            return np.zeros(self.batch_shape, dtype=complex)
        return self.coeffs[..., idx]

    def gradient(self, conjugated: bool = False) -> np.ndarray:
        """First derivatives d/dz_k (or d/dconj z_k) at the base point, shape (..., nvar)."""
        offset = self.space.nvar if conjugated else 0
        return self.coeffs[..., 1 + offset : 1 + offset + self.space.nvar]

    def complex_hessian(self) -> np.ndarray:
        """Matrix of d^2 f / dz_k dconj(z_l) at the base point, shape (..., nvar, nvar)."""
        nv = self.space.nvar
        out = np.zeros(self.batch_shape + (nv, nv), dtype=complex)
        for k in range(nv):
            for l in range(nv):
                alpha = [0] * nv
                beta = [0] * nv
                alpha[k] = 1
                beta[l] = 1
                out[..., k, l] = self.coefficient(alpha, beta)
        return out

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"Cannot raise jet order {self.order} to {order}")
        space = get_space(self.space.nvar, order)
        return Jet(space, self.coeffs[..., : space.dim])

    # -- arithmetic -------------------------------------------------------

    def _align(self, other: "Jet") -> Tuple["Jet", "Jet"]:
        order = min(self.order, other.order)
        return self.truncate(order), other.truncate(order)

    def __add__(self, other: Union["Jet", ArrayLike]) -> "Jet":
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs + b.coeffs)
        coeffs = self.coeffs.copy() if np.ndim(other) <= len(self.batch_shape) else None
        if coeffs is None:
            coeffs = np.broadcast_to(self.coeffs, np.shape(other) + (self.space.dim,)).copy()
        coeffs[..., 0] = coeffs[..., 0] + other
        return Jet(self.space, coeffs)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other: Union["Jet", ArrayLike]) -> "Jet":
        return self + (-other)

    def __rsub__(self, other: ArrayLike) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Union["Jet", ArrayLike]) -> "Jet":
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.space.multiply(a.coeffs, b.coeffs))
        return Jet(self.space, self.coeffs * np.asarray(other, dtype=complex)[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other: Union["Jet", ArrayLike]) -> "Jet":
        if isinstance(other, Jet):
            return self * other.power(-1.0)
        return self * (1.0 / np.asarray(other, dtype=complex))

    def conj(self) -> "Jet":
        return Jet(self.space, self.space.conjugate(self.coeffs))

    def real(self) -> "Jet":
        return (self + self.conj()) * 0.5

    def imag(self) -> "Jet":
        return (self - self.conj()) * (-0.5j)

    def derive(self, variable: int, conjugated: bool = False) -> "Jet":
        slot = self.space.slot(variable, conjugated)
        lower = get_space(self.space.nvar, self.order - 1)
        return Jet(lower, self.space.differentiate(self.coeffs, slot))

    # -- composition with univariate functions ----------------------------

    def compose(self, derivatives: Callable[[np.ndarray, int], np.ndarray]) -> "Jet":
        """
        Compose a univariate function g with this jet.

        Args:
            derivatives: Callable (x0, j) -> g^{(j)}(x0), vectorized over x0

        Returns:
            The jet of g(f) by Taylor expansion around the constant term
        """
        x0 = self.value
        shifted = self - x0
        order = self.order
        result = Jet.constant(self.space, derivatives(x0, order) / math.factorial(order), self.batch_shape)
        for j in range(order - 1, -1, -1):
            result = result * shifted + derivatives(x0, j) / math.factorial(j)
        return result

    def exp(self) -> "Jet":
        return self.compose(lambda x0, j: np.exp(x0))

    def power(self, exponent: float) -> "Jet":
        def derivs(x0: np.ndarray, j: int) -> np.ndarray:
            falling = 1.0
            for i in range(j):
                falling *= exponent - i
            return falling * np.power(x0.astype(complex), exponent - j)

        return self.compose(derivs)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, nvar={self.space.nvar}, batch={self.batch_shape})"


def stack_coefficients(jets: Sequence[Jet]) -> np.ndarray:
    """Stack jets of a common space along a new leading axis."""
    order = min(j.order for j in jets)
    return np.stack([j.truncate(order).coeffs for j in jets])
