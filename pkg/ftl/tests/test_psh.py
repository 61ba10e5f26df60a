"""
Tests for component tuples, local pieces and the assembled plurisubharmonic function.
"""

import math

import numpy as np
import pytest

from ftl.algebra import Jet, get_space, scale
from ftl.algebra.expr import modulus_squared_expr
from ftl.domains import make_domain, tangent_frame
from ftl.exceptions import ConfigError
from ftl.homog import BallFamily
from ftl.psh import (
    CALIBRATION_DEPTHS,
    CALIBRATION_SEED_OFFSET,
    ComponentTuple,
    ExprFunction,
    assemble_H,
    chi,
    chi_ball,
    classify_points,
    component_schedule,
    enumerate_components,
    lambda_for,
    local_H,
    measure_D,
    project,
    safe_power,
    slot_components,
    smoothstep,
    step_jet,
    strip_points,
    verify_adapted,
)
from ftl.weights import FrameProvider


@pytest.fixture(scope="module")
def disc():
    return make_domain({"name": "disc", "n": 2, "P": "|z1|^2", "M": 4}, levi_samples=0)


@pytest.fixture(scope="module")
def quartic():
    return make_domain({"name": "quartic", "n": 2, "P": "|z1|^4", "M": 4}, levi_samples=0)


class TestCutoffs:
    """Test the smooth steps and their jets."""

    def test_smoothstep(self):
        assert np.allclose(smoothstep(np.array([-1.0, 0.0, 0.5, 1.0, 2.0])), [0, 0, 0.5, 1, 1])

    def test_step_jet_derivative(self):
        (w,) = Jet.coordinates(get_space(1, 1), np.array([0.3]))
        jet = step_jet(w)
        assert np.isclose(jet.value, smoothstep(0.3))
        assert np.isclose(jet.gradient()[0], 30 * 0.3**2 * 0.7**2)

    def test_chi(self):
        (w,) = Jet.coordinates(get_space(1, 0), np.array([[0.5], [1.0], [0.75]]))
        assert np.allclose(np.real(chi(w).value), [0.0, 1.0, 0.5])

    def test_chi_ball(self):
        (s,) = Jet.coordinates(get_space(1, 0), np.array([[0.25], [1.0], [0.1]]))
        assert np.allclose(np.real(chi_ball(s).value), [1.0, 0.0, 1.0])

    def test_safe_power(self):
        (w,) = Jet.coordinates(get_space(1, 1), np.array([[0.0], [2.0]]))
        modulus2 = (w * w.conj()).real()
        assert np.allclose(np.real(safe_power(modulus2, 0.5).value), [0.0, 2.0])


class TestProjection:
    """Test the projection to the boundary."""

    def test_normal_axis(self, siegel):
        q = siegel.interior_point(1e-2)
        assert np.allclose(project(siegel.rho, q)[0], 0.0, atol=1e-14)

    def test_near_boundary(self, siegel):
        q = siegel.boundary_point([0.1, 0.05j])
        q[-1] -= 1e-3
        projected = project(siegel.rho, q)
        assert abs(siegel.defining_value(projected[0])) < 1e-8


class TestComponents:
    """Test the components of the weights."""

    def test_siegel_levi_only(self, siegel_frame, origin3):
        comps, pruned = slot_components(siegel_frame, 0, origin3, 1e-2, 4)
        assert [c.is_levi for c in comps] == [True]
        assert comps[0].value(origin3[None, :], 1e-2)[0] == pytest.approx(100.0)
        assert pruned == 0

    def test_siegel_tuple(self, siegel_frame, origin3):
        tuples = enumerate_components(siegel_frame, origin3, 1e-2, 4)
        assert len(tuples) == 1
        # doubled weights: the Levi component carries half of F_i
        assert tuples[0].ratios == pytest.approx((0.5, 0.5))
        assert tuples[0].shares == pytest.approx((1.0, 1.0))
        assert tuples[0].active == ()
        assert measure_D(tuples) == pytest.approx(4.0)

    def test_herbort_origin_has_list_components(self, herbort_frame, origin3):
        tuples = enumerate_components(herbort_frame, origin3, 1e-4, 6)
        assert tuples and not any(t.degenerate for t in tuples)
        for t in tuples:
            assert all(c.order >= 3 for c in t.components)
            assert t.active == (0, 1)
            assert t.to_dict()["orders"] == [c.order for c in t.components]

    def test_degenerate_slot(self, origin3):
        flat = make_domain({"name": "flat", "n": 3, "P": "|z1|^2", "M": 4}, levi_samples=0)
        tuples = enumerate_components(tangent_frame(flat), origin3, 1e-2, 4)
        assert len(tuples) == 1 and tuples[0].degenerate
        assert tuples[0].label() == "(degenerate)"
        assert measure_D(tuples) == 1.0


class TestSchedule:
    """Test the constant schedule."""

    def test_lambda(self):
        assert lambda_for(0.0) == 1.5
        assert lambda_for(1.0) == 1.5
        assert lambda_for(math.exp(3)) == pytest.approx(3.0)
        assert lambda_for(1e9) == 4.0

    def test_schedule(self):
        tuples = [ComponentTuple((), (k,), (), ()) for k in range(2)]
        schedule = component_schedule(tuples, C=1.0, D=2.0, M=2, n=2)
        largest, smaller = schedule
        assert largest.A == 4.0**5
        assert largest.B == 2.0
        assert largest.epsilon == 1.0
        assert largest.lam == 4.0
        assert largest.A_prime == pytest.approx(4.0**5 + 2 * math.exp(8))
        assert smaller.A == pytest.approx(3 * largest.A_prime)
        assert smaller.B == pytest.approx(2.0 + 64.0)
        assert smaller.epsilon == pytest.approx(0.2)


class TestLocalPiece:
    """Test local piece construction."""

    def test_parameters_checked(self, siegel, siegel_frame, origin3):
        tuples = enumerate_components(siegel_frame, origin3, 1e-2, 4)
        with pytest.raises(ConfigError):
            local_H(siegel_frame, siegel, origin3, 1e-2, tuples[0], lam=1.0, B=1.0, c=0.25)
        with pytest.raises(ConfigError):
            local_H(siegel_frame, siegel, origin3, 1e-2, tuples[0], lam=2.0, B=1.0, c=0.5, c0=0.3)

    def test_levi_only_piece_vanishes(self, siegel, siegel_frame, origin3):
        tuples = enumerate_components(siegel_frame, origin3, 1e-2, 4)
        piece = local_H(siegel_frame, siegel, origin3, 1e-2, tuples[0], lam=2.0, B=1.0, c=0.25)
        assert piece.bound == 0.0
        assert np.allclose(piece.value(siegel.interior_point(5e-3)[None, :]), 0.0)

    def test_support(self, quartic):
        frame = tangent_frame(quartic)
        p = np.zeros(2, dtype=complex)
        tuples = enumerate_components(frame, p, 1e-2, 4)
        piece = local_H(frame, quartic, p, 1e-2, tuples[0], lam=2.0, B=1.0, c=0.25)
        far = quartic.interior_point(5e-3, [0.5])
        assert piece.support_mask(p[None, :])[0]
        assert not piece.support_mask(far[None, :])[0]
        assert piece.value(far[None, :])[0] == 0.0
        assert abs(piece.value(quartic.interior_point(5e-3)[None, :])[0]) <= piece.bound


class TestVerification:
    """Test the adaptedness check."""

    def test_not_psh(self, disc):
        H = ExprFunction(scale(-1.0, modulus_squared_expr(2)))
        pts = np.array([disc.interior_point(1e-2, [0.01]), disc.interior_point(5e-3)])
        report = verify_adapted(H, disc, tangent_frame(disc), 1e-2, pts, directions=4)
        assert report.min_eigenvalue == pytest.approx(-1.0)
        assert report.beta == float("inf")
        assert {w.condition for w in report.failures} >= {"hessian", "plurisubharmonicity"}

    def test_disc_assembly(self, disc):
        """Strongly pseudoconvex at every point: no local pieces, H = g(ρ/δ) + |z|^2."""
        provider = FrameProvider(disc)
        assembly = assemble_H(disc, provider, 1e-2, cap=256)
        assert assembly.pieces == []
        assert assembly.A == 1.0
        assert assembly.B_const == pytest.approx(1.0)
        family = BallFamily(disc, provider, assembly.p0, assembly.c)
        pts = strip_points(disc, family, 1e-2, count=8)
        report = verify_adapted(assembly, disc, tangent_frame(disc), 1e-2, pts, directions=8)
        assert report.failures == []
        assert report.min_eigenvalue > 0
        assert report.beta <= 10.0
        assert assembly.to_dict()["pieces"] == 0
        assert assembly.constants["raw_deficit"] == 0.0
        assert assembly.correction == 0.0

    def test_quadratic_profile(self, disc):
        assembly = assemble_H(disc, FrameProvider(disc), 1e-2, cap=256)
        p = disc.interior_point(1e-2)
        expected = (-1 + 2.5) ** 2 - 3.25 + assembly.B_const * 1e-4
        assert assembly.value(p[None, :])[0] == pytest.approx(expected)
        assert assembly.bound == pytest.approx(3.0 + assembly.B_const * disc.window**2)

    def test_exp_profile(self, disc):
        assembly = assemble_H(disc, FrameProvider(disc), 1e-2, cap=256, profile="exp")
        p = disc.interior_point(1e-2)
        assert assembly.value(p[None, :])[0] == pytest.approx(math.exp(-1) + assembly.B_const * 1e-4)

    def test_unknown_profile(self, disc):
        with pytest.raises(ConfigError):
            assemble_H(disc, FrameProvider(disc), 1e-2, profile="cubic")

    def test_calibration_grid_disjoint(self, disc):
        family = BallFamily(disc, FrameProvider(disc), np.zeros(2, dtype=complex), 0.25)
        verify = strip_points(disc, family, 1e-2, seed=0)
        calibration = strip_points(
            disc, family, 1e-2, count=48, depths=CALIBRATION_DEPTHS, seed=CALIBRATION_SEED_OFFSET, include_center=False
        )
        distances = np.abs(verify[:, None, :] - calibration[None, :, :]).max(axis=-1)
        assert distances.min() > 1e-9

    def test_outside_window(self, disc):
        assembly = assemble_H(disc, FrameProvider(disc), 2.0)
        assert assembly.centers == []
        assert assembly.notes


@pytest.mark.slow
class TestDegenerateAssembly:
    """Assembly on {Re z2 + |z1|^4 < 0}, whose Levi form vanishes at the origin."""

    @pytest.fixture(scope="class")
    def assembly(self, quartic):
        return assemble_H(quartic, FrameProvider(quartic), 1e-2, cap=256)

    def test_pieces(self, assembly):
        assert assembly.pieces
        assert all(piece.lam > 1 for piece in assembly.pieces)
        assert assembly.bound >= assembly.A

    def test_psh_on_strip(self, assembly, quartic):
        family = BallFamily(quartic, FrameProvider(quartic), assembly.p0, assembly.c)
        pts = strip_points(quartic, family, 1e-2)
        report = verify_adapted(assembly, quartic, tangent_frame(quartic), 1e-2, pts, directions=8)
        assert report.min_eigenvalue > 0
        assert np.isfinite(report.beta)

    def test_raw_deficit_reported(self, assembly, quartic):
        family = BallFamily(quartic, FrameProvider(quartic), assembly.p0, assembly.c)
        pts = strip_points(quartic, family, 1e-2)
        report = verify_adapted(assembly, quartic, tangent_frame(quartic), 1e-2, pts, directions=8)
        assert assembly.constants["raw_deficit"] >= 0
        assert assembly.correction == pytest.approx(2.0 * assembly.constants["raw_deficit"])
        assert report.raw_min_eigenvalue == pytest.approx(report.min_eigenvalue - assembly.correction)
        assert report.to_dict()["raw_deficit"] == report.raw_deficit

    def test_without_safeguard(self, assembly, quartic):
        bare = assemble_H(quartic, FrameProvider(quartic), 1e-2, cap=256, safeguard=False)
        assert bare.correction == 0.0
        assert bare.constants["raw_deficit"] == pytest.approx(assembly.constants["raw_deficit"])
        assert bare.B_const == pytest.approx(assembly.B_const - assembly.correction)
        family = BallFamily(quartic, FrameProvider(quartic), bare.p0, bare.c)
        pts = strip_points(quartic, family, 1e-2)
        report = verify_adapted(bare, quartic, tangent_frame(quartic), 1e-2, pts, directions=8)
        assert report.raw_min_eigenvalue == report.min_eigenvalue
        if report.min_eigenvalue < -1e-8:
            assert "plurisubharmonicity" in {w.condition for w in report.failures}
        if bare.constants["raw_deficit"] > 0:
            assert any("uncorrected" in note for note in bare.notes)

    def test_classification(self, assembly, quartic):
        pts = np.array([quartic.interior_point(5e-3), quartic.interior_point(1e-2, [0.02])])
        counts = classify_points(assembly, pts)
        for entry in counts:
            assert entry["E1"] + entry["E2"] + entry["E3"] == len(assembly.pieces)


@pytest.mark.slow
class TestCatalogAssembly:
    """Adaptedness of the assembled function on catalog domains over δ in [1e-3, 1e-1]."""

    DELTAS = (1e-1, 1e-2, 1e-3)

    def verify(self, domain, delta, **kwargs):
        provider = FrameProvider(domain)
        assembly = assemble_H(domain, provider, delta, **kwargs)
        family = BallFamily(domain, provider, assembly.p0, assembly.c)
        pts = strip_points(domain, family, delta)
        return verify_adapted(assembly, domain, provider(assembly.p0, delta), delta, pts, directions=16)

    def test_siegel(self, siegel):
        for delta in self.DELTAS:
            report = self.verify(siegel, delta)
            assert report.min_eigenvalue >= -1e-8
            assert report.failures == []
            assert report.beta <= 10.0

    def test_siegel_exp_profile(self, siegel):
        """With e^{ρ/δ} the normal Hessian falls to e^{-2}/4 of F(N) at ρ = -2δ."""
        report = self.verify(siegel, 1e-2, profile="exp")
        assert report.beta > 10.0

    def test_decoupled(self, decoupled):
        betas = []
        for delta in self.DELTAS:
            report = self.verify(decoupled, delta)
            assert report.min_eigenvalue >= -1e-8
            assert np.isfinite(report.beta)
            betas.append(report.beta)
        middle = float(np.median(betas))
        assert all(abs(b / middle - 1) <= 0.5 for b in betas)

    def test_negative_control(self, siegel):
        """H = |z|^2 has a δ-independent Hessian, so the normalized ratio grows like 1/δ."""
        provider = FrameProvider(siegel)
        family = BallFamily(siegel, provider, np.zeros(3, dtype=complex), 0.25)
        H = ExprFunction(modulus_squared_expr(3))
        scaled = []
        for delta in (1e-2, 1e-4):
            pts = strip_points(siegel, family, delta)
            report = verify_adapted(H, siegel, tangent_frame(siegel), delta, pts, directions=8)
            scaled.append(report.sup_H * report.beta_hessian)
        assert scaled[1] >= 10 * scaled[0]
        assert report.beta > 100.0
