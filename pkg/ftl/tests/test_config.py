"""
Tests for experiment configuration.
"""

import json

import numpy as np
import pytest

from ftl.config import DeltaGrid, ExperimentConfig, apply_seed_env, load_config, resolve_config
from ftl.exceptions import ConfigError


class TestDeltaGrid:
    """Test δ grid parsing."""

    def test_range(self):
        grid = DeltaGrid.parse("1e-3:1e-1:3")
        assert np.allclose(grid.values(), [1e-1, 1e-2, 1e-3])
        assert grid.label() == "0.001:0.1:3"

    def test_single_value(self):
        assert DeltaGrid.parse("0.05").values().tolist() == [0.05]
        assert DeltaGrid.parse(0.05).values().tolist() == [0.05]

    def test_mapping(self):
        grid = DeltaGrid.parse({"min": 1e-4, "max": 1e-2, "count": 2})
        assert np.allclose(grid.values(), [1e-2, 1e-4])

    @pytest.mark.parametrize("text", ["1e-3:1e-1", "a:b:3", "1e-1:1e-3:3", "-1", "0.1:0.2:0"])
    def test_malformed(self, text):
        with pytest.raises(ConfigError):
            DeltaGrid.parse(text)


class TestExperimentConfig:
    """Test defaults, validation and overrides."""

    def test_defaults(self):
        config = ExperimentConfig()
        assert config.domain == "siegel"
        assert config.frame == "canonical"
        assert len(config.deltas()) == 5

    def test_overrides(self):
        config = ExperimentConfig().with_overrides({"delta": "0.01", "seed": 3, "csv": None, "json": "out.json"})
        assert config.deltas().tolist() == [0.01]
        assert config.seed == 3
        assert config.csv is None
        assert config.json_path == "out.json"

    @pytest.mark.parametrize("override", [{"c": 0.0}, {"c": 2.0}, {"frame": "unknown"}, {"M": 9}, {"samples": 0}])
    def test_invalid(self, override):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides(override)

    def test_extra_keys_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig().with_overrides({"colour": "blue"})


class TestLoading:
    """Test configuration files and the seed variable."""

    def test_yaml(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("domain: herbort\ndelta: 1e-4:1e-2:3\nframe: levi_eigen\n")
        config = load_config(path)
        assert config.domain == "herbort"
        assert config.frame == "levi_eigen"
        assert len(config.deltas()) == 3

    def test_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"delta": {"min": 0.01, "max": 0.1, "count": 2}, "json": "r.json"}))
        config = load_config(path)
        assert config.json_path == "r.json"
        assert np.allclose(config.deltas(), [0.1, 0.01])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).domain == "siegel"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "missing.yaml")

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_seed_env(self, monkeypatch):
        monkeypatch.setenv("FTL_SEED", "42")
        assert apply_seed_env(ExperimentConfig(seed=1)).seed == 42
        monkeypatch.setenv("FTL_SEED", "x")
        with pytest.raises(ConfigError):
            apply_seed_env(ExperimentConfig())

    def test_resolve_precedence(self, tmp_path, monkeypatch):
        monkeypatch.delenv("FTL_SEED", raising=False)
        path = tmp_path / "run.yaml"
        path.write_text("seed: 5\nsamples: 10\n")
        config = resolve_config(str(path), {"samples": 20, "seed": None}, command="weights")
        assert config.seed == 5
        assert config.samples == 20
        assert config.command == "weights"
        monkeypatch.setenv("FTL_SEED", "9")
        assert resolve_config(str(path), {"seed": 6}).seed == 9

    def test_command_mismatch(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("command: bergman\n")
        with pytest.raises(ConfigError):
            resolve_config(str(path), {}, command="weights")
