"""
Tests for grids and slope fits.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftl.exceptions import ConfigError
from ftl.fitting import linear_fit, log_grid, loglog_fit, parse_grid


class TestGrids:
    """Test log-spaced grids."""

    def test_decreasing(self):
        grid = log_grid(1e-3, 1e-1, 3)
        assert np.allclose(grid, [1e-1, 1e-2, 1e-3])

    @pytest.mark.parametrize("lo,hi,count", [(0.0, 1.0, 3), (1.0, 0.1, 3), (0.1, 1.0, 1)])
    def test_invalid(self, lo, hi, count):
        with pytest.raises(ConfigError):
            log_grid(lo, hi, count)

    def test_parse(self):
        assert parse_grid("0.5").tolist() == [0.5]
        assert parse_grid(0.5).tolist() == [0.5]
        assert len(parse_grid("1e-6:1e-2:5")) == 5

    @pytest.mark.parametrize("text", ["0", "1:2", "x"])
    def test_parse_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_grid(text)


class TestFits:
    """Test least-squares fits."""

    def test_exact_line(self):
        fit = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.half_width == pytest.approx(0.0, abs=1e-9)
        assert fit.to_dict()["count"] == 4

    def test_two_points(self):
        assert linear_fit([0, 1], [0, 2]).half_width == 0.0

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            linear_fit([1.0], [1.0])

    @settings(max_examples=25, deadline=None)
    @given(exponent=st.floats(-4, 4), scale=st.floats(1e-3, 1e3))
    def test_power_law(self, exponent, scale):
        x = log_grid(1e-4, 1e-1, 6)
        fit = loglog_fit(x, scale * x**exponent)
        assert fit.within(exponent, 1e-8)

    def test_loglog_positive(self):
        with pytest.raises(ValueError):
            loglog_fit([1.0, 2.0], [1.0, 0.0])
