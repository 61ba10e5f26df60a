"""
Experiment configuration.

An experiment is described by an ``ExperimentConfig``: the domain, the δ
grid, the frame provider, the ball scale and the sampling knobs shared by
every subcommand. Configurations can be written as YAML or JSON files and
passed with ``--config``; command-line flags override the file and the
``FTL_SEED`` environment variable overrides both for the seed.
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigError
from .fitting import log_grid

logger = logging.getLogger("ftl.config")

SEED_ENV = "FTL_SEED"

FrameKind = Literal["canonical", "levi_eigen", "orthonormal"]


class DeltaGrid(BaseModel):
    """Log-spaced δ grid from max down to min."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    min: float = Field(..., gt=0, description="Smallest δ of the grid")
    max: float = Field(..., gt=0, description="Largest δ of the grid")
    count: int = Field(1, ge=1, description="Number of grid points")

    @model_validator(mode="after")
    def _check_bounds(self) -> "DeltaGrid":
        if self.count == 1 and self.min != self.max:
            raise ValueError("A single-point grid needs min == max")
        if self.count > 1 and not self.min < self.max:
            raise ValueError(f"Grid bounds must satisfy min < max, got {self.min}, {self.max}")
        return self

    @classmethod
    def parse(cls, text: Union[str, float, Mapping[str, Any]]) -> "DeltaGrid":
        """
        Build a grid from "min:max:count", a single value or a mapping.

        Raises:
            ConfigError: If the text is malformed
        """
        if isinstance(text, Mapping):
            return _validated(cls, dict(text))
        if isinstance(text, (int, float)):
            return _validated(cls, {"min": float(text), "max": float(text), "count": 1})
        parts = str(text).split(":")
        try:
            if len(parts) == 1:
                value = float(parts[0])
                return _validated(cls, {"min": value, "max": value, "count": 1})
            if len(parts) == 3:
                return _validated(cls, {"min": float(parts[0]), "max": float(parts[1]), "count": int(parts[2])})
        except ValueError as e:
            raise ConfigError(f"Malformed grid {text!r}: {e}")
        raise ConfigError(f"Malformed grid {text!r}: expected min:max:count")

    def values(self) -> np.ndarray:
        """Grid points, strictly decreasing."""
        if self.count == 1:
            return np.asarray([self.max])
        return log_grid(self.min, self.max, self.count)

    def label(self) -> str:
        return f"{self.min:g}:{self.max:g}:{self.count}"


class ExperimentConfig(BaseModel):
    """Settings shared by every experiment subcommand."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    domain: str = Field("siegel", description="Domain file path or catalog name")
    command: Optional[str] = Field(None, description="Subcommand the configuration is meant for")
    delta: DeltaGrid = Field(
        default_factory=lambda: DeltaGrid(min=1e-3, max=1e-1, count=5),
        description="δ grid, log-spaced",
    )
    frame: FrameKind = Field("canonical", description="Frame provider")
    c: float = Field(0.25, gt=0, le=1, description="Pseudo-ball scale")
    M: Optional[int] = Field(None, ge=2, le=8, description="List-length bound (defaults to the domain's)")
    samples: int = Field(256, ge=1, description="Monte Carlo or direction sample count")
    seed: int = Field(0, ge=0, description="Base random seed")
    jobs: Optional[int] = Field(None, ge=0, description="Worker count (None or 0 uses every core)")
    csv: Optional[str] = Field(None, description="CSV report path")
    json_path: Optional[str] = Field(None, alias="json", description="JSON report path")

    @field_validator("delta", mode="before")
    @classmethod
    def _parse_delta(cls, value: Any) -> Any:
        if isinstance(value, DeltaGrid):
            return value
        return DeltaGrid.parse(value)

    def deltas(self) -> np.ndarray:
        return self.delta.values()

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        """Copy with the non-None overrides applied and validated."""
        data = self.model_dump(by_alias=True)
        data["delta"] = self.delta
        for key, value in overrides.items():
            if value is not None:
                data[key] = value
        return _validated(ExperimentConfig, data)


def _validated(model: Any, data: Dict[str, Any]) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"]) or model.__name__
        raise ConfigError(f"Invalid configuration at {where}: {first['msg']}")


def apply_seed_env(config: ExperimentConfig) -> ExperimentConfig:
    """Replace the seed by FTL_SEED when that variable is set."""
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return config
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}")
    logger.debug(f"Seed overridden by {SEED_ENV}={seed}")
    return config.with_overrides({"seed": seed})


def load_config(file: Union[str, Path]) -> ExperimentConfig:
    """
    Load an experiment configuration from a YAML or JSON file.

    Args:
        file: Path to the file (``.json`` is read as JSON, anything else as YAML)

    Returns:
        The validated configuration

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the file cannot be parsed or does not validate
    """
    file_path = Path(file)
    if not file_path.exists():
        raise FileNotFoundError(f"Config file not found: {file}")

    try:
        with open(file_path, "r", encoding="utf-8") as f:
            if file_path.suffix.lower() == ".json":
                data = json.load(f)
            else:
                data = yaml.safe_load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to load config from {file}: {e}")

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {file} must contain a mapping")
    logger.info(f"Loaded configuration from {file}")
    return _validated(ExperimentConfig, data)


def resolve_config(
    config_file: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    command: Optional[str] = None,
) -> ExperimentConfig:
    """
    Merge a config file, command-line overrides and FTL_SEED.

    Flags given on the command line win over the file; the environment
    seed wins over both.
    """
    config = load_config(config_file) if config_file else ExperimentConfig()
    if command is not None and config.command not in (None, command):
        raise ConfigError(f"Config file is for {config.command!r}, not {command!r}")
    merged = dict(overrides or {})
    merged["command"] = command or config.command
    return apply_seed_env(config.with_overrides(merged))
