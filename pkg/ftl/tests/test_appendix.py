"""
Tests for the iterated-Laplacian search and the random corpus sweep.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftl.algebra import CPoly
from ftl.appendix import (
    check_nonnegative,
    corpus_sweep,
    derivative_at_zero,
    derivative_bound,
    derivative_pairs,
    is_radial,
    laplacian_at_zero,
    laplacian_domination,
    random_nonneg_poly,
    sampled_derivative_sup,
    sum_of_squares,
)
from ftl.exceptions import ConfigError, DomainError

z = CPoly.variable(1, 0)
square = CPoly.modulus_squared(1, 0)
quartic = square * square
# |z + z^2|^2 = |z|^2 + z conj(z)^2 + z^2 conj(z) + |z|^4
mixed = sum_of_squares([z + z * z])


class TestDerivatives:
    """Test derivatives at the origin and their bounds."""

    def test_derivative_at_zero(self):
        assert derivative_at_zero(quartic, (2,), (2,)) == pytest.approx(4.0)
        assert derivative_at_zero(mixed, (2,), (1,)) == pytest.approx(2.0)
        assert derivative_at_zero(mixed, (1,), (0,)) == 0

    def test_laplacian_at_zero(self):
        assert laplacian_at_zero(square, (1,)) == 1.0
        assert laplacian_at_zero(quartic, (2,)) == 4.0
        assert laplacian_at_zero(quartic, (1,)) == 0.0

    def test_bound_dominates_samples(self):
        assert derivative_bound(square) == pytest.approx(1.0)
        assert sampled_derivative_sup(mixed, 3, samples=256) <= derivative_bound(mixed) * (1 + 1e-12)

    def test_nonnegative(self):
        assert check_nonnegative(mixed) >= -1e-12
        with pytest.raises(DomainError):
            check_nonnegative(-square)


class TestDomination:
    """Test the exhaustive search on worked examples."""

    def test_diagonal_second_order(self):
        result = laplacian_domination(square, (1,), (1,), K1=1.0)
        assert result.a == (1,)
        assert result.case == "diagonal"
        assert result.constant == pytest.approx(1.0)
        assert result.holds

    def test_diagonal_fourth_order(self):
        result = laplacian_domination(quartic, (2,), (2,), K1=derivative_bound(quartic))
        assert result.a == (2,)
        assert result.value == 4.0
        assert result.target == pytest.approx(4.0**16)
        assert result.constant == pytest.approx(4.0**15)
        assert result.order == 4

    def test_reduced(self):
        result = laplacian_domination(mixed, (2,), (1,), K1=derivative_bound(mixed))
        assert result.case == "reduced"
        assert result.a == (1,)
        assert result.value == pytest.approx(1.0)
        assert result.target == pytest.approx(256.0)
        assert result.constant == pytest.approx(256.0)
        assert result.to_dict()["a"] == [1]

    def test_order_below_M(self):
        with pytest.raises(ConfigError):
            laplacian_domination(square, (2,), (1,), K1=1.0, M=3)

    def test_K1_checked(self):
        with pytest.raises(ConfigError):
            laplacian_domination(quartic, (1,), (1,), K1=0.5)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            laplacian_domination(-square, (1,), (1,), K1=1.0)


class TestGenerator:
    """Test random sums of squared moduli."""

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 1000), half=st.integers(1, 2), j=st.integers(1, 2))
    def test_nonnegative_and_bounded(self, seed, half, j):
        g, K1 = random_nonneg_poly(seed, 2 * half, j)
        assert g.degree <= 2 * half
        assert g.real_valued
        assert check_nonnegative(g, samples=256) >= -1e-12 * max(1.0, K1)
        assert K1 == derivative_bound(g)

    def test_degree_checked(self):
        with pytest.raises(ConfigError):
            random_nonneg_poly(0, 3, 1)
        with pytest.raises(ConfigError):
            random_nonneg_poly(0, 0, 1)

    def test_is_radial(self):
        assert is_radial(quartic)
        assert not is_radial(mixed)

    def test_derivative_pairs(self):
        assert len(derivative_pairs(1, 2)) == 5
        assert len(derivative_pairs(2, 1)) == 4
        assert ((1,), (0,)) in derivative_pairs(1, 1)


class TestCorpus:
    """Test the corpus sweep."""

    def test_small_sweep(self):
        report = corpus_sweep(count=3, max_degree=4, max_j=2, max_order=2, seed=0, jobs=1)
        assert report.violations == 0
        assert len(report.rows()) == 3
        assert report.to_dict()["cases"] == 3
        assert all(np.isfinite(v) for v in report.buckets().values())
