"""
Tests for exact polynomials in (z, conj z).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftl.algebra.jets import Jet, get_space
from ftl.algebra.poly import CPoly, monomial, multi_indices, sum_polys

coords = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def sample_poly() -> CPoly:
    """2 z1^2 conj(z2) + (1 - 1j) |z1|^2 + 3."""
    return (
        monomial(2, (2, 0), (0, 1), 2.0)
        + monomial(2, (1, 0), (1, 0), 1 - 1j)
        + CPoly.constant(2, 3.0)
    )


class TestConstruction:
    """Test construction and basic queries."""

    def test_zero_coefficients_dropped(self):
        """Exact zeros never appear in the term map."""
        p = CPoly(2, {((1, 0), (0, 0)): 0.0, ((0, 1), (0, 0)): 2.0})
        assert len(p) == 1
        assert p.coefficient((0, 1), (0, 0)) == 2.0

    def test_variable_product_is_modulus(self):
        """z1 * conj(z1) equals the modulus-squared constructor."""
        z1 = CPoly.variable(2, 0)
        assert z1 * z1.conjugate() == CPoly.modulus_squared(2, 0)

    def test_degree(self):
        assert sample_poly().degree == 3
        assert CPoly.zero(3).degree == 0

    def test_depends_on(self):
        p = sample_poly()
        assert p.depends_on(0)
        assert p.depends_on(1)
        assert not CPoly.modulus_squared(2, 0).depends_on(1)

    def test_variable_out_of_range(self):
        with pytest.raises(ValueError):
            CPoly.variable(2, 2)

    def test_exponent_dimension_mismatch(self):
        with pytest.raises(ValueError):
            CPoly(2, {((1,), (0,)): 1.0})

    def test_nonpositive_dimension(self):
        with pytest.raises(ValueError):
            CPoly(0)


class TestArithmetic:
    """Test ring operations."""

    def test_add_dimension_mismatch(self):
        with pytest.raises(ValueError):
            CPoly.variable(2, 0) + CPoly.variable(3, 0)

    def test_subtraction_cancels(self):
        p = sample_poly()
        assert (p - p).is_zero

    def test_power(self):
        z1 = CPoly.variable(1, 0)
        cube = (z1 + 1.0) ** 3
        assert cube.coefficient((2,), (0,)) == 3.0
        assert cube.coefficient((0,), (0,)) == 1.0
        assert (z1 ** 0) == CPoly.constant(1, 1.0)

    def test_negative_power(self):
        with pytest.raises(ValueError):
            CPoly.variable(1, 0) ** -1

    def test_scalar_division(self):
        p = CPoly.constant(1, 4.0) / 2
        assert p.coefficient((0,), (0,)) == 2.0

    def test_real_part(self):
        """Re(z1) is real-valued, z1 is not."""
        z1 = CPoly.variable(2, 0)
        assert z1.real_part().is_real_valued()
        assert not z1.is_real_valued()
        assert z1.imag_part().is_real_valued()

    def test_sum_polys(self):
        total = sum_polys(2, [CPoly.modulus_squared(2, k) for k in range(2)])
        assert total.coefficient((1, 0), (1, 0)) == 1.0
        assert total.coefficient((0, 1), (0, 1)) == 1.0

    def test_hash_matches_equality(self):
        a = CPoly.modulus_squared(2, 1)
        b = CPoly.variable(2, 1) * CPoly.variable(2, 1, conjugated=True)
        assert a == b
        assert hash(a) == hash(b)


class TestCalculus:
    """Test exact differentiation."""

    def test_derive_holomorphic(self):
        p = sample_poly()
        d = p.derive(0)
        assert d.coefficient((1, 0), (0, 1)) == 4.0
        assert d.coefficient((0, 0), (1, 0)) == 1 - 1j

    def test_derive_conjugated(self):
        d = sample_poly().derive(1, conjugated=True)
        assert d == monomial(2, (2, 0), (0, 0), 2.0)

    def test_mixed_derivative(self):
        g = CPoly.modulus_squared(1, 0) ** 2
        assert g.derivative((2,), (2,)) == CPoly.constant(1, 4.0)
        assert g.derivative((3,), (0,)).is_zero

    def test_derive_out_of_range(self):
        with pytest.raises(ValueError):
            sample_poly().derive(5)

    def test_homogeneous_and_truncate(self):
        p = sample_poly()
        assert p.homogeneous_part(2) == monomial(2, (1, 0), (1, 0), 1 - 1j)
        assert p.truncate(2).degree == 2
        assert p.holomorphic_part() == CPoly.constant(2, 3.0)


class TestEvaluation:
    """Test evaluation, re-expansion and composition."""

    def test_evaluate_batched(self):
        p = CPoly.modulus_squared(2, 0) + CPoly.modulus_squared(2, 1)
        pts = np.array([[1.0, 1j], [2.0, 0.0]])
        assert np.allclose(p(pts), [2.0, 4.0])

    def test_evaluate_wrong_width(self):
        with pytest.raises(ValueError):
            sample_poly().evaluate(np.zeros(3))

    @settings(max_examples=25, deadline=None)
    @given(coords, coords, coords, coords)
    def test_taylor_shift(self, p1, p2, w1, w2):
        """Q(w) = P(p + w) for the re-expanded polynomial."""
        p = sample_poly()
        shifted = p.taylor_coefficients([p1, p2])
        assert np.isclose(shifted([w1, w2]), p([p1 + w1, p2 + w2]), atol=1e-9)

    def test_taylor_coefficients_truncated(self):
        shifted = sample_poly().taylor_coefficients([1.0, 0.5], max_degree=1)
        assert shifted.degree <= 1

    def test_compose(self):
        """|z1|^2 composed with z1 -> w1 + w2 is |w1 + w2|^2."""
        w = [CPoly.variable(2, 0) + CPoly.variable(2, 1)]
        composed = CPoly.modulus_squared(1, 0).compose(w)
        point = np.array([0.3 + 0.1j, -0.2j])
        assert np.isclose(composed(point), abs(point.sum()) ** 2)

    def test_compose_wrong_arity(self):
        with pytest.raises(ValueError):
            sample_poly().compose([CPoly.variable(2, 0)])

    def test_compose_jets_matches_derivatives(self):
        p = sample_poly()
        point = np.array([0.4 - 0.3j, 1.1 + 0.2j])
        jet = p.compose_jets(Jet.coordinates(get_space(2, 2), point))
        assert np.isclose(jet.value, p(point))
        for k in range(2):
            assert np.isclose(jet.gradient()[k], p.derivative_at([int(j == k) for j in range(2)], [0, 0], point))
            assert np.isclose(
                jet.gradient(conjugated=True)[k],
                p.derivative_at([0, 0], [int(j == k) for j in range(2)], point),
            )

    def test_pretty(self):
        assert CPoly.modulus_squared(1, 0).pretty() == "1*z1*conj(z1)"
        assert CPoly.zero(2).pretty() == "0"


class TestMultiIndices:
    """Test graded multi-index enumeration."""

    def test_graded_order(self):
        assert multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_min_order(self):
        assert all(sum(a) >= 2 for a in multi_indices(3, 3, min_order=2))
        assert len(multi_indices(3, 2, min_order=2)) == 6
