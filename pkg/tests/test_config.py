"""Tests for pipeline configuration loading (config.py)."""

import pytest

from radar_flow_labels.config import PipelineConfig, write_default_config
from radar_flow_labels.exceptions import ConfigError


class TestDefaults:
    """Default hyperparameters."""

    def test_defaults(self):
        """Thresholds default to the values the pipeline was tuned with."""
        config = PipelineConfig()
        assert config.delta_dyn == 0.05
        assert config.delta_spatial == 3.0
        assert config.delta_velocity == 1.5
        assert config.delta_intensity == 0.008
        assert config.delta_neighbor == 0.5
        assert config.delta_adaptive_min == 0.1
        assert config.delta_adaptive_max == 5.0
        assert config.grid_half_extent == 204.8
        assert config.density_cluster_eps == 1.0
        assert config.density_cluster_min_pts == 5

    def test_rejects_non_positive(self):
        """Thresholds must be strictly positive."""
        with pytest.raises(ValueError):
            PipelineConfig(delta_dyn=0.0)

    def test_adaptive_range_must_be_ordered(self):
        """The near gate must be smaller than the far gate."""
        with pytest.raises(ValueError, match="delta_adaptive_min"):
            PipelineConfig(delta_adaptive_min=5.0, delta_adaptive_max=1.0)


class TestFromFile:
    """TOML config files."""

    def test_flat_table(self, tmp_path):
        """Top-level keys are read as config fields."""
        path = tmp_path / "config.toml"
        path.write_text("delta_dyn = 0.1\nv_bound = 40.0\n")
        config = PipelineConfig.from_file(path)
        assert config.delta_dyn == 0.1
        assert config.v_bound == 40.0

    def test_pipeline_table(self, tmp_path):
        """Keys under a [pipeline] table are read as well."""
        path = tmp_path / "config.toml"
        path.write_text("[pipeline]\ndelta_spatial = 2.0\n")
        assert PipelineConfig.from_file(path).delta_spatial == 2.0

    def test_unknown_key(self, tmp_path):
        """A misspelt key is rejected by name."""
        path = tmp_path / "config.toml"
        path.write_text("delta_dynamic = 0.1\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            PipelineConfig.from_file(path)

    def test_invalid_value(self, tmp_path):
        """Values failing validation surface as ConfigError."""
        path = tmp_path / "config.toml"
        path.write_text("delta_neighbor = -1.0\n")
        with pytest.raises(ConfigError):
            PipelineConfig.from_file(path)

    def test_malformed_toml(self, tmp_path):
        """TOML syntax errors report the offending line."""
        path = tmp_path / "config.toml"
        path.write_text("delta_dyn = = 1\n")
        with pytest.raises(ConfigError, match="line 1"):
            PipelineConfig.from_file(path)

    def test_missing_file(self, tmp_path):
        """A missing config path is a ConfigError, not an OSError."""
        with pytest.raises(ConfigError, match="not found"):
            PipelineConfig.from_file(tmp_path / "missing.toml")


class TestPrecedence:
    """Defaults, then file, then environment, then explicit overrides."""

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        """RADAR_FLOW_ variables win over the file, other file keys survive."""
        path = tmp_path / "config.toml"
        path.write_text("delta_dyn = 0.1\ndelta_spatial = 2.0\n")
        monkeypatch.setenv("RADAR_FLOW_DELTA_DYN", "0.2")
        config = PipelineConfig.load(path)
        assert config.delta_dyn == 0.2
        assert config.delta_spatial == 2.0

    def test_bad_env_value(self, monkeypatch):
        """An unparsable environment value names its source."""
        monkeypatch.setenv("RADAR_FLOW_V_BOUND", "fast")
        with pytest.raises(ConfigError, match="environment"):
            PipelineConfig.load()

    def test_with_overrides_beats_env(self, monkeypatch):
        """Explicit overrides win over the environment and None means unset."""
        monkeypatch.setenv("RADAR_FLOW_DELTA_DYN", "0.2")
        config = PipelineConfig.load().with_overrides(delta_dyn="0.3", v_bound=None)
        assert config.delta_dyn == 0.3
        assert config.v_bound == 60.0

    def test_with_overrides_unknown_key(self):
        """Overrides are checked against the field names."""
        with pytest.raises(ConfigError, match="unknown"):
            PipelineConfig().with_overrides(not_a_field=1)


class TestWriteDefaultConfig:
    """init-config output loads back to the defaults."""

    def test_round_trip(self, tmp_path):
        """The commented default file loads back to the defaults."""
        path = write_default_config(tmp_path / "sub" / "radar-flow.toml")
        text = path.read_text()
        assert "[pipeline]" in text
        assert "# m/s, |v_comp| > delta_dyn" in text
        assert PipelineConfig.from_file(path) == PipelineConfig()
