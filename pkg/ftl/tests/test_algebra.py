"""
Tests for Taylor jets, smooth expressions, vector fields and derivative lists.
"""

import math

import numpy as np
import pytest

from ftl.algebra import (
    BumpPhi,
    CPoly,
    Exp,
    Field,
    Jet,
    JetArgs,
    JetSpace,
    ListSpec,
    Poly,
    RecipSqrt,
    add,
    apply_field,
    bracket,
    bump_derivative,
    combine,
    derive,
    enumerate_lists,
    get_space,
    list_apply,
    list_tensors,
    mul,
    reciprocal,
)
from ftl.algebra.expr import modulus_squared_expr
from ftl.exceptions import WeightError


def z(n: int, k: int, conjugated: bool = False) -> Poly:
    return Poly(CPoly.variable(n, k, conjugated))


class TestJetSpace:
    """Test the graded monomial basis."""

    def test_dimension(self):
        space = JetSpace(2, 2)
        # monomials of degree <= 2 in four slots
        assert space.dim == 15
        assert list(space.sizes) == [1, 5, 15]

    def test_index_outside(self):
        space = get_space(1, 2)
        assert space.monomial_index((3,), (0,)) == -1
        assert space.monomial_index((1,), (1,)) >= 0

    def test_invalid(self):
        with pytest.raises(ValueError):
            JetSpace(0, 2)


class TestJet:
    """Test jet arithmetic against closed forms."""

    def test_product(self):
        q = 0.5 + 0.25j
        (w,) = Jet.coordinates(get_space(1, 3), np.array([q]))
        sq = w * w
        assert np.isclose(sq.value, q * q)
        assert np.isclose(sq.gradient()[0], 2 * q)
        assert np.isclose(sq.coefficient((2,), (0,)), 1.0)
        assert np.isclose(sq.coefficient((3,), (0,)), 0.0)

    def test_exp(self):
        q = 0.3 - 0.2j
        (w,) = Jet.coordinates(get_space(1, 3), np.array([q]))
        e = w.exp()
        for k in range(4):
            assert np.isclose(e.coefficient((k,), (0,)), np.exp(q) / math.factorial(k))

    def test_reciprocal_power(self):
        (w,) = Jet.coordinates(get_space(1, 2), np.array([2.0]))
        inv = w.power(-1.0)
        assert np.isclose(inv.value, 0.5)
        assert np.isclose(inv.coefficient((1,), (0,)), -0.25)
        assert np.isclose(inv.coefficient((2,), (0,)), 0.125)

    def test_conjugate_slot(self):
        (w,) = Jet.coordinates(get_space(1, 1), np.array([1j]))
        c = w.conj()
        assert np.isclose(c.value, -1j)
        assert np.isclose(c.gradient(conjugated=True)[0], 1.0)
        assert np.isclose(c.gradient()[0], 0.0)

    def test_complex_hessian(self):
        rho = modulus_squared_expr(2)
        args = JetArgs.at_points(get_space(2, 2), np.array([[0.1, 0.2j], [1.0, -1.0]]))
        hess = rho.jet(args).complex_hessian()
        assert hess.shape == (2, 2, 2)
        assert np.allclose(hess, np.eye(2))

    def test_truncate_up(self):
        (w,) = Jet.coordinates(get_space(1, 1), np.array([0.0]))
        with pytest.raises(ValueError):
            w.truncate(2)

    def test_mixed_orders_align(self):
        (a,) = Jet.coordinates(get_space(1, 3), np.array([1.0]))
        (b,) = Jet.coordinates(get_space(1, 1), np.array([1.0]))
        assert (a + b).order == 1


class TestSmoothExpr:
    """Test symbolic derivative rules against jets and closed forms."""

    points = np.array([[0.3 + 0.1j, -0.2 + 0.4j], [0.05j, 0.7]])

    def _check_gradient(self, expr):
        args = JetArgs.at_points(get_space(2, 1), self.points)
        jet = expr.jet(args)
        assert np.allclose(jet.value, expr.evaluate(self.points))
        for k in range(2):
            assert np.allclose(jet.gradient()[..., k], derive(expr, k).evaluate(self.points))
            assert np.allclose(jet.gradient(conjugated=True)[..., k], derive(expr, k, True).evaluate(self.points))

    def test_exp_gradient(self):
        self._check_gradient(Exp(mul(z(2, 0), z(2, 1, True))))

    def test_recip_sqrt_gradient(self):
        self._check_gradient(RecipSqrt(add(Poly(CPoly.constant(2, 1.0)), modulus_squared_expr(2))))

    def test_product_gradient(self):
        e = mul(Exp(z(2, 0)), RecipSqrt(add(Poly(CPoly.constant(2, 2.0)), modulus_squared_expr(2))))
        self._check_gradient(e)

    def test_bump_gradient(self):
        self._check_gradient(BumpPhi(0.1, 1.0, modulus_squared_expr(2)))

    def test_reciprocal(self):
        base = add(Poly(CPoly.constant(2, 1.0)), modulus_squared_expr(2))
        assert np.allclose(reciprocal(base).evaluate(self.points), 1.0 / base.evaluate(self.points))

    def test_polynomial_parts_merge(self):
        s = add(z(2, 0), z(2, 1))
        assert isinstance(s, Poly)
        assert mul(Poly(CPoly.zero(2)), Exp(z(2, 0))).is_zero

    def test_derive_out_of_range(self):
        with pytest.raises(ValueError):
            derive(z(2, 0), 3)

    def test_conjugate(self):
        e = Exp(z(2, 0))
        assert np.allclose(e.conjugate().evaluate(self.points), np.conj(e.evaluate(self.points)))


class TestBump:
    """Test the flat bump and its closed-form derivatives."""

    def test_flat_region(self):
        assert np.all(bump_derivative(0.5, 2.0, np.array([0.0, 0.1, 0.25]), order=2) == 0)

    def test_value(self):
        x = 1.25
        assert np.isclose(bump_derivative(0.5, 2.0, x), 2.0 * np.exp(-1.0))

    def test_first_derivative(self):
        x, h = 0.6, 1e-6
        numeric = (bump_derivative(0.5, 1.0, x + h) - bump_derivative(0.5, 1.0, x - h)) / (2 * h)
        assert np.isclose(bump_derivative(0.5, 1.0, x, order=1), numeric, rtol=1e-5)


class TestFields:
    """Test vector fields and brackets."""

    def test_coordinate_fields_commute(self):
        assert bracket(Field.coordinate(2, 0), Field.coordinate(2, 1, conjugated=True)).is_zero

    def test_bracket(self):
        """[d/dz1, z1 d/dz2] = d/dz2."""
        x = Field.coordinate(2, 0)
        y = Field([Poly(CPoly.zero(2)), z(2, 0)])
        result = bracket(x, y)
        assert result.holo[0].is_zero
        assert result.holo[1].poly == CPoly.constant(2, 1.0)

    def test_apply(self):
        value = apply_field(Field.coordinate(2, 0), modulus_squared_expr(2))
        assert value.poly == CPoly.variable(2, 0, conjugated=True)

    def test_conjugate_type(self):
        x = Field.coordinate(2, 1)
        assert x.type10
        assert not x.conjugate().type10

    def test_combine(self):
        f = combine([Field.coordinate(2, 0), Field.coordinate(2, 1)], [2.0, 1j])
        holo, anti = f.coefficients_at(np.zeros((3, 2)))
        assert np.allclose(holo, [[2.0, 1j]] * 3)
        assert np.allclose(anti, 0)
        with pytest.raises(ValueError):
            combine([Field.coordinate(2, 0)], [1.0, 2.0])


class TestBracketIdentities:
    """Antisymmetry, Jacobi and mixed partials on fields with non-polynomial coefficients."""

    points = np.array([[0.3 + 0.1j, -0.2 + 0.4j], [0.05j, 0.7], [-0.4, 0.2 - 0.3j]])

    @staticmethod
    def fields():
        nothing = Poly(CPoly.zero(2))
        x = Field([z(2, 1), mul(z(2, 0), z(2, 0, True))])
        y = Field([Exp(z(2, 0)), nothing], [z(2, 1), nothing])
        w = Field.coordinate(2, 1).multiplied(RecipSqrt(add(Poly(CPoly.constant(2, 1.0)), modulus_squared_expr(2))))
        return x, y, w

    def values(self, f):
        holo, anti = f.coefficients_at(self.points)
        return np.concatenate([holo, anti], axis=-1)

    def test_antisymmetry(self):
        x, y, w = self.fields()
        for a, b in ((x, y), (y, w), (w, x)):
            assert np.allclose(self.values(bracket(a, b)), -self.values(bracket(b, a)), atol=1e-12)

    def test_self_bracket(self):
        for f in self.fields():
            assert np.allclose(self.values(bracket(f, f)), 0.0, atol=1e-12)

    def test_jacobi(self):
        x, y, w = self.fields()
        total = (
            self.values(bracket(x, bracket(y, w)))
            + self.values(bracket(y, bracket(w, x)))
            + self.values(bracket(w, bracket(x, y)))
        )
        assert np.allclose(total, 0.0, atol=1e-10)

    def test_bracket_acts_as_commutator(self):
        x, y, _ = self.fields()
        f = mul(Exp(mul(z(2, 0), z(2, 1, True))), modulus_squared_expr(2))
        lhs = apply_field(bracket(x, y), f).evaluate(self.points)
        rhs = apply_field(x, apply_field(y, f)).evaluate(self.points) - apply_field(y, apply_field(x, f)).evaluate(self.points)
        assert np.allclose(lhs, rhs, atol=1e-10)

    @pytest.mark.parametrize("first,second", [((0, False), (1, True)), ((0, False), (1, False)), ((0, True), (0, False))])
    def test_mixed_partials(self, first, second):
        e = mul(Exp(mul(z(2, 0), z(2, 1, True))), RecipSqrt(add(Poly(CPoly.constant(2, 2.0)), modulus_squared_expr(2))))
        one = derive(derive(e, *first), *second).evaluate(self.points)
        two = derive(derive(e, *second), *first).evaluate(self.points)
        assert np.allclose(one, two, atol=1e-12)


class TestLists:
    """Test list words and their values."""

    def test_counts(self):
        spec = ListSpec(((0, False), (0, True), (1, False), (0, True)))
        assert spec.counts(0) == (3, 1, 2)
        assert spec.counts(1) == (1, 1, 0)
        assert spec.slots == (0, 1)
        assert spec.conjugated().counts(0) == (3, 2, 1)
        assert str(ListSpec(((0, False), (1, True)))) == "(L1, conj(L2))"

    def test_enumerate(self):
        assert len(list(enumerate_lists(1, 3))) == 4 + 8
        assert len(list(enumerate_lists(2, 2))) == 16

    def test_short_list(self, siegel_frame):
        with pytest.raises(WeightError):
            list_apply(ListSpec(((0, False),)), siegel_frame, siegel_frame.rho)

    def test_siegel_levi_list(self, siegel_frame):
        """<d rho, [L1, conj L1]> = 1 on the Siegel domain."""
        value = list_apply(ListSpec(((0, False), (0, True))), siegel_frame, siegel_frame.rho)
        pts = np.array([[0.1, 0.2j, -0.05], [0.0, 0.0, 0.0]])
        assert np.allclose(value.evaluate(pts), 1.0)

    def test_tensors_match_symbolic(self, decoupled):
        """Batched list tensors agree with symbolic list values."""
        from ftl.domains import tangent_frame

        frame = tangent_frame(decoupled)
        letters = frame.letters()
        pts = decoupled.boundary_point([0.3 + 0.1j, 0.2 - 0.25j])[None, :]
        tensors = list_tensors(letters, frame.rho, pts, 4)
        for spec in enumerate_lists(frame.m, 4):
            index = tuple(slot + (frame.m if conj else 0) for slot, conj in spec.word)
            expected = list_apply(spec, frame, frame.rho).evaluate(pts)
            assert np.allclose(tensors[len(spec)][index], expected, atol=1e-10)
