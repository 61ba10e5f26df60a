"""
Rigid polynomial model domains.

A model domain is {Re z_n + P(z', conj z') < 0} with P a real polynomial
vanishing to second order at 0. This module builds domains from definition
files, the canonical tangent frame L_i = d/dz_i - 2 (dP/dz_i) d/dz_n, the
unit normal field, Levi matrices and the frame diagonalizing the Levi form
at a point.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import CPoly, Field, JetArgs, Poly, RecipSqrt, SmoothExpr, add, bracket, combine, get_space, mul, pair_drho
from .catalog import catalog_path
from .exceptions import DomainError, FrameError
from .parser import parse_domain, to_cpoly
from .schema import validate_domain_definition

logger = logging.getLogger("ftl.domains")

# Levi spot check tolerances
LEVI_SAMPLES = 200
LEVI_TOLERANCE = 1e-10


class FrameProvenance(str, Enum):
    """How a frame was obtained."""

    CANONICAL = "canonical"
    LEVI_EIGEN = "levi_eigen"
    USER = "user"
    LOCALIZED = "localized"
    ORTHONORMAL = "orthonormal"


@dataclass(frozen=True)
class DomainDefinition:
    """Validated content of a domain definition file."""

    name: str
    n: int
    P: str
    M: int
    normal_slot: int
    window: float = 1.0
    description: str = ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DomainDefinition":
        checked = validate_domain_definition(data)
        return cls(
            name=checked["name"],
            n=checked["n"],
            P=checked["P"],
            M=checked["M"],
            normal_slot=checked["normal_slot"],
            window=float(checked.get("window", 1.0)),
            description=checked.get("description", ""),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "P": self.P,
            "M": self.M,
            "normal_slot": self.normal_slot,
            "window": self.window,
            "description": self.description,
        }


@dataclass(frozen=True)
class LeviCheck:
    """Outcome of the pseudoconvexity spot check."""

    samples: int
    min_eigenvalue: float
    witness: Tuple[complex, ...]

    @property
    def passed(self) -> bool:
        return self.min_eigenvalue >= -LEVI_TOLERANCE


@dataclass(frozen=True)
class ModelDomain:
    """
    Rigid model domain rho = Re z_n + P.

    P is stored in internal coordinates, where the complex normal direction
    is always the last variable.
    """

    name: str
    n: int
    P: CPoly
    M: int
    window: float = 1.0
    expression: str = ""
    normal_slot: int = 0
    levi_check: Optional[LeviCheck] = field(default=None, compare=False)

    @cached_property
    def rho_poly(self) -> CPoly:
        return self.P + CPoly.variable(self.n, self.n - 1).real_part()

    @cached_property
    def rho(self) -> SmoothExpr:
        return Poly(self.rho_poly)

    @property
    def m(self) -> int:
        """Number of tangent slots."""
        return self.n - 1

    def defining_value(self, points: np.ndarray) -> np.ndarray:
        """rho at points, as a real array."""
        return np.real(self.rho_poly.evaluate(np.asarray(points, dtype=complex)))

    def in_window(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=complex), axis=-1) <= self.window

    def boundary_point(self, tangent: Sequence[complex], im_normal: float = 0.0) -> np.ndarray:
        """The boundary point over z' = tangent with Im z_n = im_normal."""
        return lift_to_boundary(self, _with_normal(tangent, im_normal))

    def interior_point(self, delta: float, tangent: Optional[Sequence[complex]] = None) -> np.ndarray:
        """A point with rho = -delta; on the normal axis by default."""
        tangent = np.zeros(self.m, dtype=complex) if tangent is None else np.asarray(tangent, dtype=complex)
        point = self.boundary_point(tangent)
        point[-1] -= delta
        return point

    @property
    def order(self) -> List[int]:
        """Internal index of every file variable; the normal slot defaults to the last one."""
        return _permutation(self.n, self.normal_slot or self.n)

    def to_internal(self, points: np.ndarray) -> np.ndarray:
        """Reorder points given in file coordinates z_1..z_n."""
        pts = np.asarray(points, dtype=complex)
        out = np.empty_like(pts)
        for old, new in enumerate(self.order):
            out[..., new] = pts[..., old]
        return out

    def to_file(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        return pts[..., self.order]

    def tangent_slot(self, variable: int) -> int:
        """
        Frame slot of the file variable z_k (1-based).

        Raises:
            DomainError: If z_k is the normal variable or out of range
        """
        if not 1 <= variable <= self.n:
            raise DomainError(f"Variable z{variable} out of range for n = {self.n}")
        slot = self.order[variable - 1]
        if slot == self.n - 1:
            raise DomainError(f"z{variable} is the normal variable of {self.name}")
        return slot


def _with_normal(tangent: Sequence[complex], im_normal: Union[float, np.ndarray]) -> np.ndarray:
    t = np.asarray(tangent, dtype=complex)
    normal = np.asarray(1j * np.asarray(im_normal, dtype=float), dtype=complex)
    normal = np.broadcast_to(normal, t.shape[:-1])
    return np.concatenate([t, normal[..., None]], axis=-1)


def lift_to_boundary(domain: ModelDomain, points: np.ndarray) -> np.ndarray:
    """Reset Re z_n so that every point lies on the boundary."""
    pts = np.array(points, dtype=complex)
    tangent_only = pts.copy()
    tangent_only[..., -1] = 0
    p_value = np.real(domain.P.evaluate(tangent_only))
    pts[..., -1] = -p_value + 1j * pts[..., -1].imag
    return pts


# -- construction -------------------------------------------------------------


def _permutation(n: int, normal_slot: int) -> List[int]:
    """Internal index of every file variable (0-based): tangents in order, normal last."""
    s = normal_slot - 1
    order = [k for k in range(n) if k != s] + [s]
    internal = [0] * n
    for new, old in enumerate(order):
        internal[old] = new
    return internal


def make_domain(defn: Union[DomainDefinition, Dict[str, Any]], levi_samples: int = LEVI_SAMPLES, seed: int = 0) -> ModelDomain:
    """
    Build a model domain from a definition.

    The expression may be either P alone or the full defining function
    Re z_s + P, where s is the normal slot.

    Args:
        defn: Definition (or its raw dict)
        levi_samples: Boundary points of the pseudoconvexity spot check
        seed: Seed of the spot-check sample

    Returns:
        The domain in internal coordinates (normal variable last)

    Raises:
        ParseError: If the expression does not parse
        DomainError: If P is not real, does not vanish to second order at 0,
            or depends on the normal variable
    """
    if isinstance(defn, dict):
        defn = DomainDefinition.from_dict(defn)
    n, s = defn.n, defn.normal_slot - 1
    poly = to_cpoly(parse_domain(defn.P), n)
    normal_part = CPoly.variable(n, s).real_part()
    if poly.depends_on(s):
        poly = poly - normal_part
        if poly.depends_on(s):
            raise DomainError(f"Domain {defn.name!r} is not rigid: P depends on z{s + 1}")
    if not poly.is_real_valued():
        raise DomainError(f"Domain {defn.name!r}: P is not real-valued")
    zero = (0,) * n
    if abs(poly.coefficient(zero, zero)) > 1e-14:
        raise DomainError(f"Domain {defn.name!r}: P(0) must vanish")
    for k in range(n):
        unit = tuple(1 if j == k else 0 for j in range(n))
        if abs(poly.coefficient(unit, zero)) > 1e-14 or abs(poly.coefficient(zero, unit)) > 1e-14:
            raise DomainError(f"Domain {defn.name!r}: gradient of P at 0 must vanish")
    internal = _permutation(n, defn.normal_slot)
    P = poly.compose([CPoly.variable(n, internal[k]) for k in range(n)])
    domain = ModelDomain(name=defn.name, n=n, P=P, M=defn.M, window=defn.window, expression=defn.P, normal_slot=defn.normal_slot)
    check = levi_spot_check(domain, levi_samples, seed)
    if not check.passed:
        logger.warning(
            f"Domain {defn.name}: Levi matrix has eigenvalue {check.min_eigenvalue:.3e} "
            f"at {check.witness}; pseudoconvexity check failed"
        )
    object.__setattr__(domain, "levi_check", check)
    logger.debug(f"Built domain {domain.name} (n={n}, M={domain.M}, P={P.pretty()})")
    return domain


def sample_boundary(domain: ModelDomain, count: int, rng: np.random.Generator, radius: Optional[float] = None) -> np.ndarray:
    """Boundary points whose tangential part is uniform in the ball of the given radius."""
    radius = domain.window / 2 if radius is None else radius
    m = domain.m
    g = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g *= radius * rng.random((count, 1)) ** (1.0 / (2 * m))
    im = rng.uniform(-radius, radius, count)
    return lift_to_boundary(domain, _with_normal(g, im))


def levi_spot_check(domain: ModelDomain, samples: int = LEVI_SAMPLES, seed: int = 0) -> LeviCheck:
    """Smallest eigenvalue of the Levi matrix of the canonical frame over sampled boundary points."""
    if samples <= 0:
        return LeviCheck(0, 0.0, ())
    rng = np.random.default_rng(seed)
    points = sample_boundary(domain, samples, rng)
    m = domain.m
    hess = np.zeros((samples, m, m), dtype=complex)
    for i in range(m):
        di = domain.P.derive(i)
        for j in range(m):
            hess[:, i, j] = di.derive(j, conjugated=True).evaluate(points)
    hess = 0.5 * (hess + np.conj(np.swapaxes(hess, -1, -2)))
    eig = np.linalg.eigvalsh(hess)[:, 0]
    worst = int(np.argmin(eig))
    return LeviCheck(samples, float(eig[worst]), tuple(complex(x) for x in points[worst]))


def definition_from_file(path: str) -> DomainDefinition:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DomainError(f"Malformed domain file {path}: {e}")
    return DomainDefinition.from_dict(data)


def load_domain(source: str, levi_samples: int = LEVI_SAMPLES) -> ModelDomain:
    """
    Load a domain from a JSON file or a catalog name.

    Raises:
        DomainError: If the source is neither an existing file nor a catalog entry
    """
    path = source if os.path.isfile(source) else catalog_path(source)
    if path is None:
        raise DomainError(f"No domain file or catalog entry named {source!r}")
    return make_domain(definition_from_file(path), levi_samples=levi_samples)


# -- frames ---------------------------------------------------------------------


def normal_field(rho: SmoothExpr) -> Field:
    """Unit complex normal sum_j rho_{conj z_j} d/dz_j / |d rho|."""
    n = rho.n
    dz = [rho.derive(j) for j in range(n)]
    dzbar = [rho.derive(j, conjugated=True) for j in range(n)]
    norm2 = add(*[mul(a, b) for a, b in zip(dz, dzbar)])
    inv = RecipSqrt(norm2)
    return Field([mul(c, inv) for c in dzbar])


@dataclass(frozen=True, eq=False)
class Frame:
    """
    Tangent (1,0) fields L_1..L_{n-1} and the unit normal N.

    `combination` holds the constant matrix U with L_i = sum_j U_ij L_j^0
    relative to the frame the construction started from.
    """

    tangent: Tuple[Field, ...]
    normal: Field
    rho: SmoothExpr
    provenance: FrameProvenance = FrameProvenance.CANONICAL
    combination: Optional[np.ndarray] = None
    eigenvalues: Optional[np.ndarray] = None
    notes: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.normal.n

    @property
    def m(self) -> int:
        return len(self.tangent)

    @property
    def fields(self) -> Tuple[Field, ...]:
        return self.tangent + (self.normal,)

    def letters(self, include_normal: bool = False) -> List[Field]:
        """Fields then their conjugates, in list-tensor order."""
        base = list(self.fields if include_normal else self.tangent)
        return base + [f.conjugate() for f in base]

    def holo_matrix(self, points: np.ndarray) -> np.ndarray:
        """Rows are the (1,0) coefficient vectors of L_1..L_{n-1}, N; shape (..., n, n)."""
        pts = np.asarray(points, dtype=complex)
        rows = [f.coefficients_at(pts)[0] for f in self.fields]
        return np.stack(rows, axis=-2)

    def determinant(self, point: np.ndarray) -> complex:
        return complex(np.linalg.det(self.holo_matrix(point)))

    def require_nonsingular(self, point: np.ndarray, bound: float = 1e-8) -> None:
        det = self.determinant(point)
        if abs(det) < bound:
            raise FrameError(f"Frame is singular at {np.asarray(point)}: |det| = {abs(det):.3e}")

    def recombined(
        self,
        matrix: np.ndarray,
        provenance: FrameProvenance,
        notes: Sequence[str] = (),
        eigenvalues: Optional[np.ndarray] = None,
    ) -> "Frame":
        """Frame with L'_i = sum_j matrix[i, j] L_j for a constant matrix."""
        u = np.asarray(matrix, dtype=complex)
        if u.shape != (self.m, self.m):
            raise FrameError(f"Recombination matrix has shape {u.shape}, expected {(self.m, self.m)}")
        tangent = tuple(combine(self.tangent, list(row)) for row in u)
        base = np.eye(self.m, dtype=complex) if self.combination is None else self.combination
        return Frame(
            tangent=tangent,
            normal=self.normal,
            rho=self.rho,
            provenance=provenance,
            combination=u @ base,
            eigenvalues=eigenvalues,
            notes=self.notes + tuple(notes),
        )

    @cached_property
    def levi_entries(self) -> Dict[Tuple[int, int], SmoothExpr]:
        """Symbolic c_ij = <d rho, [L_i, conj L_j]> for i <= j."""
        out: Dict[Tuple[int, int], SmoothExpr] = {}
        for i in range(self.m):
            for j in range(i, self.m):
                out[(i, j)] = pair_drho(bracket(self.tangent[i], self.tangent[j].conjugate()), self.rho)
        return out


def tangent_frame(domain: ModelDomain) -> Frame:
    """Canonical rigid frame L_i = d/dz_i - 2 (dP/dz_i) d/dz_n with the unit normal."""
    n = domain.n
    zero = Poly(CPoly.zero(n))
    one = Poly(CPoly.constant(n, 1.0))
    tangent = []
    for i in range(domain.m):
        holo: List[SmoothExpr] = [zero] * n
        holo[i] = one
        holo[n - 1] = Poly(domain.P.derive(i) * -2.0)
        tangent.append(Field(holo))
    return Frame(
        tangent=tuple(tangent),
        normal=normal_field(domain.rho),
        rho=domain.rho,
        provenance=FrameProvenance.CANONICAL,
        combination=np.eye(domain.m, dtype=complex),
    )


def levi_matrix(frame: Frame, domain: Any, point: np.ndarray) -> np.ndarray:
    """
    Levi matrix c_ij(p) of the frame's tangent fields.

    Args:
        frame: Frame tangent to the domain's defining function
        domain: Anything with a `rho` expression (model or localized domain)
        point: Point or array of points (..., n)

    Returns:
        Hermitian array (..., n-1, n-1)
    """
    pts = np.asarray(point, dtype=complex)
    m = frame.m
    out = np.zeros(pts.shape[:-1] + (m, m), dtype=complex)
    entries = frame.levi_entries if domain is None or domain.rho is frame.rho else _levi_entries(frame, domain.rho)
    for (i, j), expr in entries.items():
        value = np.broadcast_to(expr.evaluate(pts), pts.shape[:-1])
        if i == j:
            out[..., i, i] = value.real
        else:
            out[..., i, j] = value
            out[..., j, i] = np.conj(value)
    return out


def _levi_entries(frame: Frame, rho: SmoothExpr) -> Dict[Tuple[int, int], SmoothExpr]:
    return {
        (i, j): pair_drho(bracket(frame.tangent[i], frame.tangent[j].conjugate()), rho)
        for i in range(frame.m)
        for j in range(i, frame.m)
    }


def levi_matrix_hessian(frame: Frame, domain: Any, point: np.ndarray) -> np.ndarray:
    """Levi matrix through the complex Hessian: A H A^H with A the tangent coefficient rows."""
    pts = np.asarray(point, dtype=complex)
    args = JetArgs.at_points(get_space(frame.n, 2), pts)
    hessian = domain.rho.jet(args).complex_hessian()
    a = frame.holo_matrix(pts)[..., : frame.m, :]
    return a @ hessian @ np.conj(np.swapaxes(a, -1, -2))


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vector) > np.abs(vector).max() * (1 - 1e-9)))
    return vector * np.exp(-1j * np.angle(vector[k]))


def levi_eigen_frame(domain: ModelDomain, point: np.ndarray, tol: float = 1e-10) -> Frame:
    """
    Constant unitary recombination of the canonical frame diagonalizing c_ij(p).

    Eigenvalues are sorted in decreasing order. Inside a cluster of equal
    eigenvalues the eigenvectors are replaced by the Gram-Schmidt
    orthonormalization of the standard basis projected onto the cluster.
    """
    base = tangent_frame(domain)
    levi = levi_matrix(base, domain, point)
    values, vectors = np.linalg.eigh(levi)
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    scale = max(1.0, float(np.max(np.abs(values))))
    notes: List[str] = []
    start = 0
    m = domain.m
    while start < m:
        stop = start + 1
        while stop < m and abs(values[stop] - values[start]) <= tol * scale:
            stop += 1
        if stop - start > 1:
            notes.append(f"degenerate eigenvalue {values[start]:.3e} with multiplicity {stop - start}")
            block = vectors[:, start:stop]
            projector = block @ np.conj(block.T)
            chosen: List[np.ndarray] = []
            for e in np.eye(m, dtype=complex):
                v = projector @ e
                for u in chosen:
                    v = v - (np.conj(u) @ v) * u
                norm = np.linalg.norm(v)
                if norm > 1e-8:
                    chosen.append(v / norm)
                if len(chosen) == stop - start:
                    break
            vectors[:, start:stop] = np.stack(chosen, axis=1)
        start = stop
    for k in range(m):
        vectors[:, k] = _fix_phase(vectors[:, k])
    frame = base.recombined(np.conj(vectors.T), FrameProvenance.LEVI_EIGEN, notes=notes, eigenvalues=values)
    if notes:
        logger.debug(f"Levi eigen frame of {domain.name} at {np.asarray(point)}: {'; '.join(notes)}")
    return frame
