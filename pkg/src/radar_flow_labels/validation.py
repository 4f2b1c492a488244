"""Frame validation on ingest.

Drops non-finite points (and radar returns sitting on their sensor origin),
counts what was dropped, and rejects frames whose structure cannot be trusted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import FrameValidationError
from .models import EgoState, LidarFrame, RadarFrame

logger = logging.getLogger(__name__)

ROTATION_TOL = 1e-9


@dataclass(frozen=True)
class ValidatedFrame:
    """A frame that passed validation, plus how many points were rejected."""

    lidar: LidarFrame
    radar: RadarFrame
    ego: EgoState
    lidar_kept: np.ndarray
    radar_kept: np.ndarray

    @property
    def lidar_rejects(self) -> int:
        return int(len(self.lidar_kept) - self.lidar_kept.sum())

    @property
    def radar_rejects(self) -> int:
        return int(len(self.radar_kept) - self.radar_kept.sum())


def check_rotation(matrix: np.ndarray, sensor_id: int = 0) -> None:
    """Raise unless ``matrix`` is orthonormal with determinant +1 (to 1e-9)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
        raise FrameValidationError(f"sensor {sensor_id}: rotation must be a finite 3x3 matrix")
    if np.max(np.abs(matrix @ matrix.T - np.eye(3))) > ROTATION_TOL:
        raise FrameValidationError(f"sensor {sensor_id}: rotation is not orthonormal")
    if abs(np.linalg.det(matrix) - 1.0) > ROTATION_TOL:
        raise FrameValidationError(f"sensor {sensor_id}: improper rotation (determinant -1)")


def validate_frame(
    lidar: LidarFrame,
    radar: RadarFrame,
    ego: EgoState,
    min_sensor_range: float = 1e-6,
) -> ValidatedFrame:
    """Validate one frame and return it with bad points removed.

    Raises:
        FrameValidationError: empty LiDAR frame, unknown sensor id, or an
            extrinsic rotation that is not a proper rotation.
    """
    if len(lidar) == 0:
        raise FrameValidationError("empty LiDAR frame")

    for sensor_id, extrinsic in enumerate(ego.sensor_extrinsics):
        check_rotation(extrinsic.matrix, sensor_id)
    if not np.all(np.isfinite(ego.translations())):
        raise FrameValidationError("sensor translation must be finite")

    n_sensors = len(ego.sensor_extrinsics)
    if len(radar):
        unknown = np.unique(radar.sensor_id[(radar.sensor_id < 0) | (radar.sensor_id >= n_sensors)])
        if len(unknown):
            raise FrameValidationError(
                f"unknown sensor_id(s) {unknown.tolist()}; {n_sensors} sensor(s) registered"
            )

    lidar_kept = np.all(np.isfinite(lidar.positions), axis=1) & np.isfinite(lidar.intensity)
    lidar_kept &= (lidar.intensity >= 0.0) & (lidar.intensity <= 1.0)
    if not lidar_kept.any():
        raise FrameValidationError("empty LiDAR frame after dropping non-finite points")

    radar_kept = np.all(np.isfinite(radar.positions), axis=1) & np.isfinite(radar.v_meas)
    if len(radar):
        origins = ego.translations()[radar.sensor_id]
        offsets = np.where(radar_kept[:, None], radar.positions - origins, 1.0)
        radar_kept &= np.linalg.norm(offsets, axis=1) >= min_sensor_range
        safe = np.where(radar_kept[:, None], radar.positions, 1.0)
        radar_kept &= np.linalg.norm(safe, axis=1) > 0

    result = ValidatedFrame(
        lidar=lidar if lidar_kept.all() else lidar.subset(np.flatnonzero(lidar_kept)),
        radar=radar if radar_kept.all() else radar.subset(np.flatnonzero(radar_kept)),
        ego=ego,
        lidar_kept=lidar_kept,
        radar_kept=radar_kept,
    )
    if result.lidar_rejects or result.radar_rejects:
        logger.debug(
            "frame %d: dropped %d LiDAR and %d radar point(s)",
            lidar.frame_index, result.lidar_rejects, result.radar_rejects,
        )
    return result
