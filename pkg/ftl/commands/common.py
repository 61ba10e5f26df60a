"""
Arguments and helpers shared by the experiment commands.

Every experiment accepts the same core flags (domain, δ grid, frame
provider, scale, samples, seed, jobs, report paths and ``--config``). Flags
left unset fall back to the config file, then to the defaults of
``ExperimentConfig``.
"""

import logging
import re
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence

import numpy as np

from ..config import ExperimentConfig, resolve_config
from ..domains import ModelDomain, load_domain
from ..exceptions import ConfigError
from ..weights import FrameProvider

logger = logging.getLogger("ftl.commands")

_TERM = re.compile(r"\s*([+-]?)\s*(?:([^*+\-e][^*]*?)\s*\*\s*)?e(\d+)\s*")


def add_experiment_arguments(parser: Any, grid: bool = True) -> None:
    """
    Add the flags every experiment understands.

    Args:
        parser: Subcommand parser
        grid: Whether the command takes a δ grid
    """
    parser.add_argument(
        "--domain",
        help="Domain file or catalog name (default: siegel)"
    )

    if grid:
        parser.add_argument(
            "--delta",
            help="δ value or log-spaced grid min:max:count"
        )

    parser.add_argument(
        "--frame",
        choices=list(FrameProvider.KINDS),
        help="Frame provider (default: canonical)"
    )

    parser.add_argument(
        "--c",
        type=float,
        help="Pseudo-ball scale c"
    )

    parser.add_argument(
        "--M",
        type=int,
        help="List-length bound (default: the domain's)"
    )

    parser.add_argument(
        "--samples",
        type=int,
        help="Sample count"
    )

    parser.add_argument(
        "--seed",
        type=int,
        help="Random seed (FTL_SEED overrides)"
    )

    parser.add_argument(
        "--jobs",
        type=int,
        help="Worker processes (0: all cores)"
    )

    parser.add_argument(
        "--csv",
        help="Write rows to this CSV file"
    )

    parser.add_argument(
        "--json",
        help="Write the JSON report to this file"
    )

    parser.add_argument(
        "--config",
        help="YAML or JSON experiment configuration"
    )


def experiment_config(args: Any) -> ExperimentConfig:
    """Merge --config, the common flags and FTL_SEED into one configuration."""
    overrides = {
        "domain": getattr(args, "domain", None),
        "delta": getattr(args, "delta", None),
        "frame": getattr(args, "frame", None),
        "c": getattr(args, "c", None),
        "M": getattr(args, "M", None),
        "samples": getattr(args, "samples", None),
        "seed": getattr(args, "seed", None),
        "jobs": getattr(args, "jobs", None),
        "csv": getattr(args, "csv", None),
        "json": getattr(args, "json", None),
    }
    return resolve_config(getattr(args, "config", None), overrides, getattr(args, "command", None))


@dataclass
class Experiment:
    """Resolved configuration with its domain and frame provider."""

    config: ExperimentConfig
    domain: ModelDomain
    provider: FrameProvider

    @property
    def M(self) -> int:
        return self.config.M or self.domain.M

    @property
    def deltas(self) -> np.ndarray:
        return self.config.deltas()

    @property
    def delta(self) -> float:
        """Largest δ of the grid, for single-δ commands."""
        return float(self.deltas[0])


def prepare(args: Any) -> Experiment:
    config = experiment_config(args)
    domain = load_domain(config.domain)
    provider = FrameProvider(domain, config.frame, config.M)
    logger.info(f"{args.command}: domain {domain.name}, frame {config.frame}, delta {config.delta.label()}")
    return Experiment(config, domain, provider)


def parse_complex_list(text: str) -> np.ndarray:
    """
    Parse "a,b,c" into complex numbers; entries use Python syntax (1+2j).

    Raises:
        ConfigError: If an entry is not a complex number
    """
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        return np.asarray([complex(item.replace(" ", "")) for item in items], dtype=complex)
    except ValueError as e:
        raise ConfigError(f"Malformed point {text!r}: {e}")


def parse_point(domain: ModelDomain, text: Optional[str], on_boundary: bool = True) -> np.ndarray:
    """
    Point in internal coordinates from file coordinates.

    With n values the point is taken as given (lifted to the boundary when
    on_boundary is set); with n - 1 values these are the tangential
    coordinates in file order and the point is lifted to the boundary.
    None means the origin.
    """
    if text is None:
        return np.zeros(domain.n, dtype=complex)
    values = parse_complex_list(text)
    if values.size == domain.n:
        point = domain.to_internal(values)
        if on_boundary:
            point = domain.boundary_point(point[:-1], float(point[-1].imag))
        return point
    if values.size == domain.m:
        full = np.zeros(domain.n, dtype=complex)
        slots = [k for k in range(1, domain.n + 1) if domain.order[k - 1] != domain.n - 1]
        for value, k in zip(values, slots):
            full[domain.order[k - 1]] = value
        return domain.boundary_point(full[:-1])
    raise ConfigError(f"Point {text!r} needs {domain.n} or {domain.m} coordinates, got {values.size}")


def parse_direction(domain: ModelDomain, text: str, normalize: bool = True) -> np.ndarray:
    """
    Tangent direction from text like "e2+e3" or "0.5*e2 - 1j*e3".

    e_k names the file variable z_k; the result holds coefficients on the
    frame's tangent slots.

    Raises:
        ConfigError: If the text is malformed or the direction is zero
    """
    coeffs = np.zeros(domain.m, dtype=complex)
    pos = 0
    stripped = text.strip()
    if not stripped:
        raise ConfigError("Empty direction")
    while pos < len(stripped):
        match = _TERM.match(stripped, pos)
        if match is None or match.end() == pos:
            raise ConfigError(f"Malformed direction {text!r} at position {pos + 1}")
        sign, factor, variable = match.groups()
        try:
            value = complex(factor.replace(" ", "")) if factor else 1.0
        except ValueError:
            raise ConfigError(f"Malformed coefficient {factor!r} in direction {text!r}")
        if sign == "-":
            value = -value
        coeffs[domain.tangent_slot(int(variable))] += value
        pos = match.end()
    norm = float(np.linalg.norm(coeffs))
    if norm == 0:
        raise ConfigError(f"Direction {text!r} is zero")
    return coeffs / norm if normalize else coeffs


def point_label(domain: ModelDomain, point: np.ndarray) -> List[str]:
    return [str(complex(z)) for z in domain.to_file(point)]


def float_list(values: Sequence[float]) -> List[float]:
    return [float(v) for v in values]
