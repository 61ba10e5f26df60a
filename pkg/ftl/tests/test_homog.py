"""
Tests for the pseudo-distance and the homogeneous-space constants.
"""

import numpy as np
import pytest

from ftl.homog import (
    BallFamily,
    doubling_estimate,
    engulfing_constant,
    gamma,
    gamma_search,
    homog_sweep,
    quasi_symmetry,
    quasi_triangle,
)
from ftl.weights import FrameProvider


@pytest.fixture(scope="module")
def provider(siegel):
    return FrameProvider(siegel)


class TestGamma:
    """γ on the Siegel domain, where the adapted chart at 0 is the identity."""

    def test_same_point(self, siegel, provider, origin3):
        assert gamma(siegel, provider, origin3, origin3) == 0.0

    def test_normal_axis(self, siegel, provider, origin3):
        """q = (0, 0, i s) enters B^c(0, δ) exactly when s < c δ."""
        q = siegel.boundary_point([0, 0], im_normal=1e-3)
        result = gamma_search(siegel, provider, origin3, q, c=0.5)
        assert result.value == pytest.approx(2e-3, rel=2e-3)
        assert result.monotone
        assert result.bracket[0] <= result.value

    def test_tangent_direction(self, siegel, provider, origin3):
        """For q over z1 = t the tangent radius binds: t < c (δ/2)^{1/2}."""
        t = 0.01
        q = siegel.boundary_point([t, 0])
        assert gamma(siegel, provider, origin3, q, c=0.5) == pytest.approx(8 * t**2, rel=2e-3)

    def test_outside_largest_ball(self, siegel, provider, origin3):
        q = siegel.boundary_point([0, 0], im_normal=5.0)
        assert gamma_search(siegel, provider, origin3, q, c=0.5).value == float("inf")

    def test_family_caches_chart(self, siegel, provider, origin3):
        family = BallFamily(siegel, provider, origin3, 0.5)
        family.ball(1e-2)
        family.ball(1e-4)
        assert len(family._charts) == 1


class TestQuasiConstants:
    """Test the reductions over γ tables."""

    def test_symmetry(self):
        table = {(0, 1): 2.0, (1, 0): 1.0}
        assert quasi_symmetry(table) == pytest.approx(2.0)

    def test_symmetry_skips_degenerate(self):
        table = {(0, 1): 0.0, (1, 0): 1.0, (0, 2): float("inf"), (2, 0): 1.0, (1, 2): 1.0, (2, 1): 1.0}
        assert quasi_symmetry(table) == 1.0

    def test_triangle(self):
        table = {(i, j): 1.0 for i in range(3) for j in range(3) if i != j}
        table[(0, 2)] = 6.0
        assert quasi_triangle(table) == pytest.approx(3.0)


class TestDoubling:
    """Ball volumes on the Siegel domain scale like δ^4."""

    def test_siegel_doubling(self, siegel, provider, origin3):
        estimate = doubling_estimate(siegel, provider, origin3, 1e-3, samples=256)
        assert estimate.ratio == pytest.approx(16.0, rel=1e-9)
        assert estimate.relative_error == pytest.approx(0.0, abs=1e-12)

    def test_engulfing_finite(self, siegel, provider, origin3):
        C = engulfing_constant(siegel, provider, origin3, 1e-3, samples=2, inner_samples=32)
        assert 1.0 <= C <= 8.0

    def test_engulfing_own_center(self, siegel, provider, origin3):
        C = engulfing_constant(siegel, provider, origin3, 1e-3, points=origin3[None, :], inner_samples=32)
        assert C == 1.0


@pytest.mark.slow
class TestSweep:
    """End-to-end homogeneous-space sweep."""

    def test_siegel_sweep(self, siegel, provider, origin3):
        report = homog_sweep(siegel, provider, origin3, [1e-2, 1e-3], samples=2, mc_samples=256)
        assert report.doubling == pytest.approx(16.0, rel=1e-9)
        assert 1.0 <= report.engulfing <= 8.0
        assert np.isfinite(report.quasi_symmetry)
        assert np.isfinite(report.quasi_triangle)
        assert report.diverged == []
        assert len(report.rows()) == 2
        assert report.to_dict()["provenance"] == "canonical"
