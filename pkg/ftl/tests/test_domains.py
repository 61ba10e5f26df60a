"""
Tests for model domains, definition files and frames.
"""

import json
import os

import numpy as np
import pytest

from ftl.catalog import catalog_names, catalog_path
from ftl.domains import (
    FrameProvenance,
    definition_from_file,
    levi_eigen_frame,
    levi_matrix,
    levi_matrix_hessian,
    load_domain,
    make_domain,
    sample_boundary,
    tangent_frame,
)
from ftl.exceptions import DomainError, FrameError, ParseError
from ftl.schema import validate_domain_definition


def definition(P: str, n: int = 2, **extra):
    data = {"name": "test", "n": n, "P": P, "M": 4}
    data.update(extra)
    return data


class TestSchema:
    """Test validation of definition files."""

    def test_defaults(self):
        checked = validate_domain_definition(definition("|z1|^2"))
        assert checked["window"] == 1.0
        assert checked["normal_slot"] == 2

    def test_missing_required(self):
        data = definition("|z1|^2")
        del data["M"]
        with pytest.raises(DomainError) as e:
            validate_domain_definition(data)
        assert "required" in str(e.value)

    def test_unknown_property(self):
        with pytest.raises(DomainError):
            validate_domain_definition(definition("|z1|^2", color="red"))

    def test_bound_ranges(self):
        with pytest.raises(DomainError) as e:
            validate_domain_definition(definition("|z1|^2", M=9))
        assert "at M" in str(e.value)

    def test_normal_slot_range(self):
        with pytest.raises(DomainError):
            validate_domain_definition(definition("|z1|^2", normal_slot=3))

    def test_input_untouched(self):
        data = definition("|z1|^2")
        validate_domain_definition(data)
        assert "window" not in data


class TestMakeDomain:
    """Test domain construction and its rejections."""

    def test_full_rho_accepted(self):
        a = make_domain(definition("|z1|^2"), levi_samples=0)
        b = make_domain(definition("Re(z2) + |z1|^2"), levi_samples=0)
        assert a.P == b.P

    def test_not_rigid(self):
        with pytest.raises(DomainError) as e:
            make_domain(definition("Re(z2) + |z1|^2 + |z2|^2"), levi_samples=0)
        assert "rigid" in str(e.value)

    def test_not_real(self):
        with pytest.raises(DomainError):
            make_domain(definition("z1^2 * z1"), levi_samples=0)

    def test_nonzero_constant(self):
        with pytest.raises(DomainError):
            make_domain(definition("1 + |z1|^2"), levi_samples=0)

    def test_linear_term(self):
        with pytest.raises(DomainError):
            make_domain(definition("Re(z1) + |z1|^2"), levi_samples=0)

    def test_parse_error_propagates(self):
        with pytest.raises(ParseError):
            make_domain(definition("|z1|^3"), levi_samples=0)

    def test_levi_spot_check_flags_concave(self):
        domain = make_domain(definition("-|z1|^2"), levi_samples=16)
        assert not domain.levi_check.passed
        assert domain.levi_check.min_eigenvalue == pytest.approx(-1.0)

    def test_levi_spot_check_passes(self, siegel):
        assert siegel.levi_check.passed


class TestCoordinates:
    """Test the file-to-internal variable order."""

    def test_normal_last(self, herbort):
        # file z1 is the normal variable, so P lives in internal slots 0 and 1
        assert not herbort.P.depends_on(2)
        assert herbort.order == [2, 0, 1]

    def test_roundtrip(self, herbort):
        point = np.array([1.0, 2.0j, 3.0])
        internal = herbort.to_internal(point)
        assert np.allclose(internal, [2.0j, 3.0, 1.0])
        assert np.allclose(herbort.to_file(internal), point)

    def test_tangent_slot(self, herbort, siegel):
        assert herbort.tangent_slot(2) == 0
        assert siegel.tangent_slot(2) == 1
        with pytest.raises(DomainError):
            herbort.tangent_slot(1)
        with pytest.raises(DomainError):
            siegel.tangent_slot(4)

    def test_boundary_and_interior(self, decoupled):
        q = decoupled.boundary_point([0.3, -0.2j], im_normal=0.1)
        assert decoupled.defining_value(q) == pytest.approx(0.0, abs=1e-14)
        p = decoupled.interior_point(0.01, [0.3, -0.2j])
        assert decoupled.defining_value(p) == pytest.approx(-0.01)

    def test_sample_boundary(self, decoupled):
        pts = sample_boundary(decoupled, 50, np.random.default_rng(1))
        assert pts.shape == (50, 3)
        assert np.allclose(decoupled.defining_value(pts), 0.0, atol=1e-12)
        assert np.all(decoupled.in_window(pts))


class TestLoading:
    """Test loading domains from files and the catalog."""

    def test_catalog(self):
        assert catalog_names() == ["decoupled", "herbort", "rotated", "siegel"]
        assert catalog_path("missing") is None

    def test_unknown_source(self):
        with pytest.raises(DomainError):
            load_domain("no-such-domain")

    def test_load_from_file(self, temp_dir):
        path = os.path.join(temp_dir, "ball.json")
        with open(path, "w") as f:
            json.dump(definition("|z1|^2", name="ball"), f)
        domain = load_domain(path, levi_samples=8)
        assert domain.name == "ball"
        assert domain.n == 2

    def test_malformed_file(self, temp_dir):
        path = os.path.join(temp_dir, "bad.json")
        with open(path, "w") as f:
            f.write("{not json")
        with pytest.raises(DomainError):
            definition_from_file(path)


class TestFrames:
    """Test canonical and Levi-diagonalizing frames."""

    def test_siegel_levi_identity(self, siegel, siegel_frame, origin3):
        assert np.allclose(levi_matrix(siegel_frame, siegel, origin3), np.eye(2))

    def test_frame_determinant(self, siegel_frame, origin3):
        assert abs(siegel_frame.determinant(origin3) - 1.0) < 1e-12
        siegel_frame.require_nonsingular(origin3)

    def test_levi_two_ways(self, decoupled):
        frame = tangent_frame(decoupled)
        pts = sample_boundary(decoupled, 8, np.random.default_rng(3))
        assert np.allclose(levi_matrix(frame, decoupled, pts), levi_matrix_hessian(frame, decoupled, pts))

    @pytest.mark.parametrize("name", ["herbort", "rotated", "siegel"])
    def test_levi_is_tangent_hessian(self, request, name):
        """<∂ρ, [L_i, conj L_j]> equals the complex Hessian of ρ on tangent fields."""
        domain = request.getfixturevalue(name)
        frame = tangent_frame(domain)
        pts = sample_boundary(domain, 6, np.random.default_rng(11))
        bracket_form = levi_matrix(frame, domain, pts)
        hessian_form = levi_matrix_hessian(frame, domain, pts)
        assert np.allclose(bracket_form, hessian_form, atol=1e-10)
        assert np.allclose(hessian_form, np.conj(np.swapaxes(hessian_form, -1, -2)), atol=1e-12)

    def test_rotated_eigen_frame(self, rotated, origin3):
        frame = levi_eigen_frame(rotated, origin3)
        assert frame.provenance is FrameProvenance.LEVI_EIGEN
        assert np.allclose(frame.eigenvalues, [2.0, 0.0])
        assert np.allclose(levi_matrix(frame, rotated, origin3), np.diag([2.0, 0.0]), atol=1e-12)

    def test_degenerate_cluster(self, siegel, origin3):
        frame = levi_eigen_frame(siegel, origin3)
        assert frame.notes
        assert np.allclose(frame.combination, np.eye(2))

    def test_recombined_shape(self, siegel_frame):
        with pytest.raises(FrameError):
            siegel_frame.recombined(np.eye(3), FrameProvenance.USER)
