"""
Tests for the Bergman kernel estimate, the Reinhardt oracle and metric estimates.
"""

import math

import numpy as np
import pytest

from ftl.bergman import (
    KERNEL_INCONCLUSIVE,
    KERNEL_LOG_OVER,
    KERNEL_LOG_TIMES,
    KernelSweep,
    ReinhardtOracle,
    bergman_estimate,
    bergman_oracle_reinhardt,
    boundary_distance,
    kernel_sweep,
    log_factor_experiment,
    metric_estimate,
    sphere_samples,
    star_ball_volume,
)
from ftl.domains import make_domain
from ftl.exceptions import OracleError
from ftl.fitting import loglog_fit
from ftl.weights import FrameProvider, WeightEngine


def siegel_kernel(delta: float) -> float:
    return 3.0 / (2 * math.pi**3 * delta**4)


@pytest.fixture(scope="module")
def disc():
    """Siegel domain of C^2, K(p_δ) = 1/(2π² δ³)."""
    return make_domain({"name": "disc", "n": 2, "P": "|z1|^2", "M": 4}, levi_samples=0)


class TestEstimate:
    """Test the product-of-weights estimate."""

    def test_boundary_distance(self, siegel):
        assert boundary_distance(siegel, siegel.interior_point(1e-3)) == pytest.approx(1e-3)

    def test_siegel_estimate(self, siegel):
        p = siegel.interior_point(1e-2)
        assert bergman_estimate(siegel, p, FrameProvider(siegel)) == pytest.approx(4e8)

    def test_boundary_point_rejected(self, siegel, origin3):
        with pytest.raises(OracleError):
            bergman_estimate(siegel, origin3, FrameProvider(siegel))


class TestOracle:
    """Test the quadrature oracle against closed forms."""

    def test_disc(self, disc):
        delta = 1e-2
        assert bergman_oracle_reinhardt(disc, delta) == pytest.approx(1 / (2 * math.pi**2 * delta**3), rel=2e-3)

    def test_c0_closed_form(self, siegel):
        oracle = ReinhardtOracle(siegel)
        assert oracle.c0(2.0) == pytest.approx((math.pi / 4.0) ** 2, rel=1e-5)

    @pytest.mark.slow
    def test_siegel(self, siegel):
        oracle = ReinhardtOracle(siegel)
        for delta in (1e-1, 1e-3):
            assert oracle.kernel(delta) == pytest.approx(siegel_kernel(delta), rel=2e-3)

    @pytest.mark.slow
    def test_small_delta_finite(self, siegel):
        """The tanh-sinh nodes reach log t ≈ 800; the tail must vanish, not overflow."""
        oracle = ReinhardtOracle(siegel)
        for delta in (1e-4, 1e-6):
            value = oracle.kernel(delta)
            assert math.isfinite(value)
            assert value == pytest.approx(siegel_kernel(delta), rel=5e-3)

    @pytest.mark.slow
    def test_siegel_slope(self, siegel):
        sweep = kernel_sweep(siegel, FrameProvider(siegel), [1e-1, 1e-2, 1e-3, 1e-4], samples=16)
        assert sweep.fits["oracle"].slope == pytest.approx(-4.0, abs=0.02)
        assert sweep.fits["estimate"].slope == pytest.approx(-4.0)
        assert sweep.flags["slope_gap"] < 0.05

    @pytest.mark.slow
    def test_decoupled_slope(self, decoupled):
        """|z1|^4 + |z2|^6: K ≍ δ^{-2 - 1/2 - 1/3}."""
        sweep = kernel_sweep(decoupled, FrameProvider(decoupled), [1e-2, 1e-3, 1e-4, 1e-5, 1e-6], samples=16)
        assert sweep.fits["oracle"].slope == pytest.approx(-17 / 6, abs=0.05)
        assert sweep.fits["estimate"].slope == pytest.approx(-17 / 6, abs=1e-6)
        assert sweep.flags["slope_gap"] < 0.05

    @pytest.mark.slow
    def test_herbort_log_factor(self, herbort):
        deltas = np.geomspace(1e-3, 1e-6, 7)
        sweep = kernel_sweep(herbort, FrameProvider(herbort), deltas, samples=64)
        report = log_factor_experiment(sweep)
        assert report.verdict == KERNEL_LOG_OVER
        assert report.winner == KERNEL_LOG_OVER
        assert report.r_squared >= 0.99
        assert report.log_slope.slope < 0

    def test_not_reinhardt(self, rotated):
        with pytest.raises(OracleError) as e:
            ReinhardtOracle(rotated)
        assert "not Reinhardt" in str(e.value)

    def test_missing_pure_term(self):
        domain = make_domain({"name": "flat", "n": 3, "P": "|z1|^2", "M": 4}, levi_samples=0)
        with pytest.raises(OracleError) as e:
            ReinhardtOracle(domain)
        assert "diverges" in str(e.value)

    def test_delta_checked(self, disc):
        with pytest.raises(OracleError):
            bergman_oracle_reinhardt(disc, 0.0)


class TestStarBall:
    """Test star-ball volumes."""

    def test_sphere_samples(self):
        z = sphere_samples(3, 100, np.random.default_rng(0))
        assert np.allclose(np.linalg.norm(z, axis=1), 1.0)

    def test_scaling_in_c(self, siegel_frame):
        p = np.array([0, 0, -1e-2], dtype=complex)
        one = star_ball_volume(siegel_frame, p, 1e-2, c=1.0, samples=128)
        two = star_ball_volume(siegel_frame, p, 1e-2, c=2.0, samples=128)
        assert two.value == pytest.approx(64 * one.value)

    def test_large_delta(self, siegel_frame):
        """At δ = 1/2 every direction has F = 4|Z|^2, so D is a ball of radius 1/2."""
        p = np.array([0, 0, -0.5], dtype=complex)
        vol = star_ball_volume(siegel_frame, p, 0.5, samples=64)
        assert vol.value == pytest.approx(math.pi**3 / 6 / 64)
        assert vol.stderr == pytest.approx(0.0, abs=1e-15)

    def test_siegel_slope(self, siegel, siegel_frame):
        deltas = [1e-1, 1e-2, 1e-3, 1e-4]
        volumes = []
        for delta in deltas:
            vol = star_ball_volume(siegel_frame, siegel.interior_point(delta), delta, samples=256)
            assert vol.value == pytest.approx(math.pi**3 * delta**4 / 24)
            assert vol.polydisc_ratio == pytest.approx(1.0)
            volumes.append(vol.value)
        assert loglog_fit(deltas, volumes).slope == pytest.approx(4.0, abs=0.1)

    def test_decoupled_slope(self, decoupled):
        frame = FrameProvider(decoupled)
        deltas = [1e-2, 1e-3, 1e-4, 1e-5]
        volumes = []
        for delta in deltas:
            p = decoupled.interior_point(delta)
            engine = WeightEngine(frame(p, delta), p, decoupled.M)
            vol = star_ball_volume(frame(p, delta), p, delta, samples=256, M=decoupled.M, engine=engine)
            assert vol.polydisc_ratio == pytest.approx(1.0, rel=1e-9)
            estimate = float(np.prod(engine.slot_weights(delta))) * delta**-2
            assert vol.value * estimate == pytest.approx(math.pi**3 / 6, rel=1e-9)
            volumes.append(vol.value)
        assert loglog_fit(deltas, volumes).slope == pytest.approx(17 / 6, abs=0.1)

    def test_off_diagonal_ratio(self, rotated):
        """Off-diagonal Levi entries leave a sampled correction to the polydisc."""
        p = rotated.interior_point(1e-2)
        frame = FrameProvider(rotated)(p, 1e-2)
        vol = star_ball_volume(frame, p, 1e-2, samples=512, M=rotated.M)
        assert 0 < vol.polydisc_ratio
        assert vol.stderr > 0


class TestMetric:
    """Test the invariant-metric estimate."""

    def test_directions(self, siegel, siegel_frame):
        provider = FrameProvider(siegel)
        q = siegel.interior_point(1e-2)
        assert metric_estimate(siegel, q, [1.0, 0, 0], provider) == pytest.approx(200.0)
        assert metric_estimate(siegel, q, [0, 0, 1.0], provider) == pytest.approx(100.0)
        assert metric_estimate(siegel, q, siegel_frame.normal, provider) == pytest.approx(100.0)

    def test_boundary_rejected(self, siegel, origin3):
        with pytest.raises(OracleError):
            metric_estimate(siegel, origin3, [1.0, 0, 0], FrameProvider(siegel))


class TestSweep:
    """Test δ sweeps and the log-factor experiment."""

    def test_disc_sweep(self, disc):
        sweep = kernel_sweep(disc, FrameProvider(disc), [1e-3, 1e-1, 1e-2], samples=64)
        assert sweep.deltas == [1e-1, 1e-2, 1e-3]
        assert sweep.fits["estimate"].slope == pytest.approx(-3.0)
        assert sweep.fits["oracle"].slope == pytest.approx(-3.0, abs=1e-2)
        assert sweep.flags["slope_gap"] < 1e-2
        for row in sweep.rows():
            assert row["estimate_over_oracle"] == pytest.approx(2 / row["delta"] ** 3 / row["oracle"])

    def test_oracle_skipped(self, rotated):
        sweep = kernel_sweep(rotated, FrameProvider(rotated), [1e-1, 1e-2], samples=16)
        assert sweep.oracle == [None, None]
        assert "oracle" not in sweep.fits
        assert np.isnan(sweep.rows()[0]["estimate_over_oracle"])

    @pytest.mark.parametrize(
        "law,verdict",
        [
            (lambda d: np.log(1 / d) / d**3, KERNEL_LOG_TIMES),
            (lambda d: 1 / (d**3 * np.log(1 / d)), KERNEL_LOG_OVER),
        ],
    )
    def test_log_factor(self, law, verdict):
        deltas = [1e-2, 1e-4, 1e-6, 1e-8]
        sweep = KernelSweep("synthetic", deltas, [1.0] * 4, [float(law(d)) for d in deltas], [1.0] * 4, [0.0] * 4)
        report = log_factor_experiment(sweep)
        assert report.verdict == verdict
        assert abs(report.log_slope.slope) == pytest.approx(1.0)
        assert len(report.to_dict()["rows"]) == 4

    def test_log_factor_inconclusive(self):
        deltas = list(np.geomspace(1e-2, 1e-7, 6))
        noisy = [d**-3 * (1 + 0.5 * (-1) ** i) for i, d in enumerate(deltas)]
        sweep = KernelSweep("synthetic", deltas, [1.0] * 6, noisy, [1.0] * 6, [0.0] * 6)
        report = log_factor_experiment(sweep)
        assert report.verdict == KERNEL_INCONCLUSIVE
        assert report.winner in (KERNEL_LOG_OVER, KERNEL_LOG_TIMES)
        assert report.r_squared < 0.99
        assert report.to_dict()["r_squared"] == report.r_squared

    def test_log_factor_threshold(self):
        deltas = [1e-2, 1e-4, 1e-6, 1e-8]
        exact = [float(1 / (d**3 * np.log(1 / d))) for d in deltas]
        sweep = KernelSweep("synthetic", deltas, [1.0] * 4, exact, [1.0] * 4, [0.0] * 4)
        report = log_factor_experiment(sweep, min_r_squared=0.99)
        assert report.verdict == KERNEL_LOG_OVER
        assert report.r_squared == pytest.approx(1.0)

    def test_log_factor_needs_oracle(self):
        sweep = KernelSweep("synthetic", [1e-2, 1e-3], [1.0, 1.0], [None, None], [1.0, 1.0], [0.0, 0.0])
        with pytest.raises(OracleError):
            log_factor_experiment(sweep)
