"""Pipeline hyperparameters and how they are loaded.

Precedence, later wins: field defaults -> TOML config file -> environment
variables (``RADAR_FLOW_<FIELD>``, a ``.env`` file is honoured by the CLI) ->
CLI flags. The effective config is always snapshotted into the run manifest.
"""

from __future__ import annotations

import os
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from .exceptions import ConfigError

ENV_PREFIX = "RADAR_FLOW_"


class PipelineConfig(BaseModel):
    """Thresholds for radar velocity estimation and radar-to-LiDAR label transfer.

    The first group drives labelling directly. The rest tune ground removal,
    density clustering and numeric tie-breaking.
    """

    # Doppler threshold separating dynamic from static radar points (m/s, strict >)
    delta_dyn: float = 0.05
    # CCL edge thresholds: spatial gap (m) and Doppler-vector gap (m/s)
    delta_spatial: float = 3.0
    delta_velocity: float = 1.5
    # LiDAR intensity split; intensity >= delta_intensity is "high"
    delta_intensity: float = 0.008
    # Max distance for re-attaching a low-intensity point to a cluster (m)
    delta_neighbor: float = 0.5
    # Range-adaptive association gate, interpolated over [0, adaptive_range_ref]
    delta_adaptive_min: float = 0.1
    delta_adaptive_max: float = 5.0
    adaptive_range_ref: float = 200.0
    # Per-axis bound on solved object velocity (m/s)
    v_bound: float = 60.0
    # Half width of the square evaluation grid centered at the ego vehicle (m)
    grid_half_extent: float = 204.8
    # Density clustering of LiDAR points
    density_cluster_eps: float = 1.0
    density_cluster_min_pts: int = 5
    # A point is dynamic when its non-ego flow exceeds this (m per frame)
    dynamic_flow_threshold: float = 0.05

    # Grid-lowest-point ground removal
    ground_cell_size: float = 1.0
    ground_height_tol: float = 0.3

    # Candidate velocities closer than this are the same candidate (m/s)
    velocity_dedup_tol: float = 1e-6
    # Singular values below rank_tol * largest count as zero
    rank_tol: float = 1e-8
    # Chamfer scores within this are ties; the earlier candidate wins (m)
    chamfer_tie_tol: float = 1e-9
    # Radar returns closer than this to their sensor origin are rejected (m)
    min_sensor_range: float = 1e-6

    @field_validator("*")
    @classmethod
    def _strictly_positive(cls, value: float | int, info) -> float | int:
        if value <= 0:
            raise ValueError(f"{info.field_name} must be strictly positive")
        return value

    @model_validator(mode="after")
    def _adaptive_range_ordered(self) -> PipelineConfig:
        if self.delta_adaptive_min >= self.delta_adaptive_max:
            raise ValueError("delta_adaptive_min must be smaller than delta_adaptive_max")
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        """Load a TOML config file (flat table or a ``[pipeline]`` table)."""
        return cls._build(_read_toml(path), source=str(path))

    @classmethod
    def from_env(cls, base: dict | None = None) -> PipelineConfig:
        """Apply ``RADAR_FLOW_<FIELD>`` environment overrides on top of ``base``."""
        values = dict(base or {})
        for name in cls.model_fields:
            raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
            if raw is not None:
                values[name] = raw
        return cls._build(values, source="environment")

    @classmethod
    def load(cls, path: str | Path | None = None) -> PipelineConfig:
        """Defaults, then the optional file, then environment overrides."""
        values = _read_toml(path) if path is not None else {}
        return cls.from_env(values)

    def with_overrides(self, **overrides) -> PipelineConfig:
        """Return a copy with non-None overrides applied and re-validated."""
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return self._build(values, source="overrides")

    @classmethod
    def _build(cls, values: dict, source: str) -> PipelineConfig:
        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigError(f"{source}: unknown config key(s): {', '.join(unknown)}")
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise ConfigError(f"{source}: {e}") from e


def _read_toml(path: str | Path) -> dict:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    return data.get("pipeline", data)


_FIELD_NOTES = {
    "delta_dyn": "m/s, |v_comp| > delta_dyn marks a radar point dynamic",
    "delta_spatial": "m, CCL spatial edge threshold",
    "delta_velocity": "m/s, CCL Doppler-vector edge threshold",
    "delta_intensity": "LiDAR intensity split (>= is high)",
    "delta_neighbor": "m, low-intensity reattachment radius",
    "delta_adaptive_min": "m, association gate at zero range",
    "delta_adaptive_max": "m, association gate at adaptive_range_ref and beyond",
    "adaptive_range_ref": "m, range where the gate saturates",
    "v_bound": "m/s, per-axis velocity bound of the solver",
    "grid_half_extent": "m, evaluation grid half width",
}


def write_default_config(path: str | Path) -> Path:
    """Write a TOML file with every parameter at its default value."""
    path = Path(path)
    lines = ["# radar-flow pipeline configuration", "[pipeline]"]
    for name, value in PipelineConfig().model_dump().items():
        note = _FIELD_NOTES.get(name)
        if note:
            lines.append(f"# {note}")
        lines.append(f"{name} = {value!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
