"""Core data models: sensor points, ego state, frames, clusters and flow fields.

Frame conventions:
    * All positions are meters in the ego frame at the frame's own timestamp.
    * ``SensorExtrinsic.rotation`` is R(S<-ego): it rotates ego-frame vectors into
      the sensor frame. ``translation`` is the sensor origin expressed in the ego frame.
    * Doppler sign: positive ``v_meas`` means the target recedes from the sensor.
      The source method never states its convention; this one makes the additive
      ego-motion compensation term cancel exactly for static targets.

Per-point pydantic models (``RadarPoint``, ``LidarPoint``) are the validated
ingest/inspection surface. The pipeline itself works on the array containers
(``LidarFrame``, ``RadarFrame``, ``FlowField``), which are frozen and hold
read-only numpy arrays so they can be shared across worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

UTC = timezone.utc

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vector3 = tuple[float, float, float]
Matrix3 = tuple[Vector3, Vector3, Vector3]

IDENTITY: Matrix3 = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

# Ground-truth class channel, stored as int8 codes in arrays and files
CLASS_NAMES: tuple[str, str, str] = ("BS", "FS", "FD")
CLASS_CODES: dict[str, int] = {name: code for code, name in enumerate(CLASS_NAMES)}


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _check_finite(values: tuple[float, ...], what: str) -> None:
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{what} must be finite")


class RadarPoint(BaseModel):
    """A single radar detection in the ego frame."""

    model_config = ConfigDict(frozen=True)

    position: Vector3
    v_meas: float
    sensor_id: int = Field(ge=0)
    frame_index: int = 0

    @field_validator("position")
    @classmethod
    def _position_valid(cls, value: Vector3) -> Vector3:
        _check_finite(value, "position")
        if math.hypot(*value) == 0.0:
            raise ValueError("radar return at the exact origin")
        return value


class LidarPoint(BaseModel):
    """A single LiDAR return in the ego frame."""

    model_config = ConfigDict(frozen=True)

    position: Vector3
    intensity: float = Field(ge=0.0, le=1.0)
    frame_index: int = 0

    @field_validator("position")
    @classmethod
    def _position_finite(cls, value: Vector3) -> Vector3:
        _check_finite(value, "position")
        return value


class SensorExtrinsic(BaseModel):
    """Pose of one radar sensor relative to the ego frame."""

    model_config = ConfigDict(frozen=True)

    rotation: Matrix3 = IDENTITY
    translation: Vector3 = (0.0, 0.0, 0.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=np.float64)

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=np.float64)

    @classmethod
    def from_yaw(
        cls, yaw_deg: float, translation: Vector3 = (0.0, 0.0, 0.0)
    ) -> SensorExtrinsic:
        """Sensor whose boresight points ``yaw_deg`` counter-clockwise from ego +x."""
        c, s = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
        # R(S<-ego) is the transpose of the sensor-to-ego yaw rotation
        rotation = ((c, s, 0.0), (-s, c, 0.0), (0.0, 0.0, 1.0))
        return cls(rotation=rotation, translation=translation)


class EgoState(BaseModel):
    """Ego motion over one frame interval plus the radar extrinsics table.

    ``delta_rotation`` is the ego rotation accumulated over ``dt`` (identity for the
    pure-translation model used by the velocity solver). Rotation properness is
    checked by :func:`radar_flow_labels.validation.validate_frame`, not here, so
    that malformed calibration can still be loaded and reported.
    """

    model_config = ConfigDict(frozen=True)

    v_ego: Vector3
    dt: float = Field(gt=0.0)
    sensor_extrinsics: list[SensorExtrinsic] = Field(default_factory=list)
    delta_rotation: Matrix3 = IDENTITY

    @field_validator("v_ego")
    @classmethod
    def _v_ego_finite(cls, value: Vector3) -> Vector3:
        _check_finite(value, "v_ego")
        return value

    @property
    def velocity(self) -> np.ndarray:
        return np.asarray(self.v_ego, dtype=np.float64)

    def rotations(self) -> np.ndarray:
        """(S, 3, 3) stack of R(S<-ego)."""
        if not self.sensor_extrinsics:
            return np.zeros((0, 3, 3))
        return np.stack([e.matrix for e in self.sensor_extrinsics])

    def translations(self) -> np.ndarray:
        """(S, 3) sensor origins in the ego frame."""
        if not self.sensor_extrinsics:
            return np.zeros((0, 3))
        return np.stack([e.origin for e in self.sensor_extrinsics])

    def ego_transform(self) -> tuple[np.ndarray, np.ndarray]:
        """Frame-to-frame ego transform T_ego = (R, t) with t = v_ego * dt."""
        return np.asarray(self.delta_rotation, dtype=np.float64), self.velocity * self.dt

    def apply_ego_transform(self, points: np.ndarray) -> np.ndarray:
        """Return T_ego * p for each row of ``points``."""
        rotation, translation = self.ego_transform()
        return np.asarray(points, dtype=np.float64) @ rotation.T + translation


@dataclass(frozen=True)
class LidarFrame:
    """One LiDAR scan as (N, 3) positions and (N,) intensities."""

    positions: np.ndarray
    intensity: np.ndarray
    frame_index: int = 0

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        intensity = np.array(self.intensity, dtype=np.float64).reshape(-1)
        if len(positions) != len(intensity):
            raise ValueError(
                f"positions ({len(positions)}) and intensity ({len(intensity)}) differ in length"
            )
        object.__setattr__(self, "positions", _readonly(positions))
        object.__setattr__(self, "intensity", _readonly(intensity))

    def __len__(self) -> int:
        return len(self.positions)

    @classmethod
    def from_points(cls, points: list[LidarPoint], frame_index: int = 0) -> LidarFrame:
        return cls(
            positions=np.array([p.position for p in points], dtype=np.float64).reshape(-1, 3),
            intensity=np.array([p.intensity for p in points], dtype=np.float64),
            frame_index=frame_index,
        )

    def point(self, index: int) -> LidarPoint:
        return LidarPoint(
            position=tuple(self.positions[index].tolist()),
            intensity=float(self.intensity[index]),
            frame_index=self.frame_index,
        )

    def subset(self, indices: np.ndarray) -> LidarFrame:
        return LidarFrame(self.positions[indices], self.intensity[indices], self.frame_index)


@dataclass(frozen=True)
class RadarFrame:
    """One fused multi-radar scan: positions, measured Doppler and sensor ids."""

    positions: np.ndarray
    v_meas: np.ndarray
    sensor_id: np.ndarray
    frame_index: int = 0

    def __post_init__(self) -> None:
        positions = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        v_meas = np.array(self.v_meas, dtype=np.float64).reshape(-1)
        sensor_id = np.array(self.sensor_id, dtype=np.int64).reshape(-1)
        if not len(positions) == len(v_meas) == len(sensor_id):
            raise ValueError("radar positions, v_meas and sensor_id differ in length")
        object.__setattr__(self, "positions", _readonly(positions))
        object.__setattr__(self, "v_meas", _readonly(v_meas))
        object.__setattr__(self, "sensor_id", _readonly(sensor_id))

    def __len__(self) -> int:
        return len(self.positions)

    @classmethod
    def empty(cls, frame_index: int = 0) -> RadarFrame:
        return cls(np.zeros((0, 3)), np.zeros(0), np.zeros(0, dtype=np.int64), frame_index)

    @classmethod
    def from_points(cls, points: list[RadarPoint], frame_index: int = 0) -> RadarFrame:
        if not points:
            return cls.empty(frame_index)
        return cls(
            positions=np.array([p.position for p in points], dtype=np.float64),
            v_meas=np.array([p.v_meas for p in points], dtype=np.float64),
            sensor_id=np.array([p.sensor_id for p in points], dtype=np.int64),
            frame_index=frame_index,
        )

    def point(self, index: int) -> RadarPoint:
        return RadarPoint(
            position=tuple(self.positions[index].tolist()),
            v_meas=float(self.v_meas[index]),
            sensor_id=int(self.sensor_id[index]),
            frame_index=self.frame_index,
        )

    def subset(self, indices: np.ndarray) -> RadarFrame:
        return RadarFrame(
            self.positions[indices], self.v_meas[indices], self.sensor_id[indices],
            self.frame_index,
        )


@dataclass(frozen=True)
class GroundTruth:
    """Per-LiDAR-point non-ego flow and class codes (see ``CLASS_NAMES``)."""

    flow: np.ndarray
    classes: np.ndarray

    def __post_init__(self) -> None:
        flow = np.array(self.flow, dtype=np.float64).reshape(-1, 3)
        classes = np.array(self.classes, dtype=np.int8).reshape(-1)
        if len(flow) != len(classes):
            raise ValueError("ground-truth flow and classes differ in length")
        object.__setattr__(self, "flow", _readonly(flow))
        object.__setattr__(self, "classes", _readonly(classes))

    def __len__(self) -> int:
        return len(self.flow)


@dataclass(frozen=True)
class Frame:
    """Everything recorded at one timestamp."""

    lidar: LidarFrame
    radar: RadarFrame
    ego: EgoState
    gt: GroundTruth | None = None
    frame_id: str = "000000"


class RadarCluster(BaseModel):
    """A CCL component of dynamic radar points and its solved full velocity."""

    model_config = ConfigDict(frozen=True)

    cluster_id: int
    member_indices: list[int]
    v_full: Vector3 = (0.0, 0.0, 0.0)
    solve_residual: float = 0.0
    rank_deficient: bool = False

    @field_validator("member_indices")
    @classmethod
    def _members_valid(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("cluster has no members")
        if len(set(value)) != len(value):
            raise ValueError("cluster members contain duplicates")
        return value

    @property
    def velocity(self) -> np.ndarray:
        return np.asarray(self.v_full, dtype=np.float64)


class LidarCluster(BaseModel):
    """A group of LiDAR points that moves rigidly, with its assigned velocity."""

    model_config = ConfigDict(frozen=True)

    cluster_id: int
    member_indices: list[int]
    dynamic: bool = False
    assigned_velocity: Vector3 | None = None
    source_radar_clusters: list[int] = Field(default_factory=list)

    @field_validator("member_indices")
    @classmethod
    def _members_valid(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("cluster has no members")
        if len(set(value)) != len(value):
            raise ValueError("cluster members contain duplicates")
        return value

    @model_validator(mode="after")
    def _static_has_no_velocity(self) -> LidarCluster:
        if not self.dynamic and self.assigned_velocity is not None:
            raise ValueError("static cluster cannot carry an assigned velocity")
        return self


@dataclass(frozen=True)
class FlowField:
    """Dense non-ego flow for one LiDAR frame.

    ``delta`` is meters over one frame interval; ``cluster_id`` is -1 for points
    outside every LiDAR cluster.
    """

    delta: np.ndarray
    dynamic: np.ndarray
    valid: np.ndarray
    cluster_id: np.ndarray

    def __post_init__(self) -> None:
        delta = np.array(self.delta, dtype=np.float64).reshape(-1, 3)
        n = len(delta)
        dynamic = np.array(self.dynamic, dtype=bool).reshape(-1)
        valid = np.array(self.valid, dtype=bool).reshape(-1)
        cluster_id = np.array(self.cluster_id, dtype=np.int64).reshape(-1)
        if not len(dynamic) == len(valid) == len(cluster_id) == n:
            raise ValueError("flow field columns differ in length")
        object.__setattr__(self, "delta", _readonly(delta))
        object.__setattr__(self, "dynamic", _readonly(dynamic))
        object.__setattr__(self, "valid", _readonly(valid))
        object.__setattr__(self, "cluster_id", _readonly(cluster_id))

    def __len__(self) -> int:
        return len(self.delta)

    @classmethod
    def zeros(cls, n: int) -> FlowField:
        return cls(
            delta=np.zeros((n, 3)),
            dynamic=np.zeros(n, dtype=bool),
            valid=np.zeros(n, dtype=bool),
            cluster_id=np.full(n, -1, dtype=np.int64),
        )


class RunManifest(BaseModel):
    """Reproducibility record written once per output directory."""

    input_path: str
    config: dict
    version: str
    seed: int | None = None
    command: str = ""
    frame_timings_ms: dict[str, float] = Field(default_factory=dict)
    scene: dict | None = None
    overrides: dict = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
    created_at: str = Field(default_factory=lambda: datetime.now(UTC).isoformat())


@dataclass
class FrameTimings:
    """Per-stage wall time (ms) for one frame pair."""

    stages: dict[str, float] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return sum(self.stages.values())
