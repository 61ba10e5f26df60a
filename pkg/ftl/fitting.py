"""
Grids and least-squares fits for scaling laws.

Sweeps are run over log-spaced δ grids and summarized by the slope of
log y against log x together with R² and a 95% confidence half-width.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Sequence, Union

import numpy as np
from scipy import stats

from .exceptions import ConfigError


@dataclass(frozen=True)
class SlopeFit:
    """Ordinary least-squares line y = slope * x + intercept."""

    slope: float
    intercept: float
    r_squared: float
    half_width: float
    count: int

    def within(self, target: float, tolerance: float) -> bool:
        return abs(self.slope - target) <= tolerance

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """
    Fit a straight line.

    Raises:
        ValueError: With fewer than two points
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size < 2:
        raise ValueError("A fit needs at least two points")
    result = stats.linregress(xs, ys)
    if xs.size > 2:
        half = float(stats.t.ppf(0.975, xs.size - 2) * result.stderr)
    else:
        half = 0.0
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        r_squared=float(result.rvalue**2),
        half_width=half,
        count=int(xs.size),
    )


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> SlopeFit:
    """Fit log y against log x; both must be positive."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("Log-log fits need positive data")
    return linear_fit(np.log(xs), np.log(ys))


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """Log-spaced grid from hi down to lo (strictly decreasing)."""
    if not 0 < lo < hi:
        raise ConfigError(f"Grid bounds must satisfy 0 < min < max, got {lo}, {hi}")
    if count < 2:
        raise ConfigError(f"Grid needs at least two points, got {count}")
    return np.geomspace(hi, lo, count)


def parse_grid(text: Union[str, float]) -> np.ndarray:
    """
    Parse "min:max:count" into a decreasing log grid, or a single value.

    Raises:
        ConfigError: If the text is malformed
    """
    if isinstance(text, (int, float)):
        return np.asarray([float(text)])
    parts = text.split(":")
    try:
        if len(parts) == 1:
            value = float(parts[0])
            if value <= 0:
                raise ConfigError(f"Grid value must be positive, got {value}")
            return np.asarray([value])
        if len(parts) == 3:
            return log_grid(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as e:
        raise ConfigError(f"Malformed grid {text!r}: {e}")
    raise ConfigError(f"Malformed grid {text!r}: expected min:max:count")
