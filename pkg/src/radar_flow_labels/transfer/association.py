"""Range-adaptive nearest-neighbor association of LiDAR points to radar points."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..config import PipelineConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Association:
    """Per-LiDAR-point association to the radar frame.

    ``nearest`` is the nearest radar index for queried points (-1 otherwise);
    ``radar_index`` hides it again where the association is not valid.
    """

    nearest: np.ndarray
    distance: np.ndarray
    valid: np.ndarray
    radar_is_dynamic: np.ndarray

    def __len__(self) -> int:
        return len(self.valid)

    @property
    def radar_index(self) -> np.ndarray:
        return np.where(self.valid, self.nearest, -1)

    @classmethod
    def empty(cls, n: int) -> Association:
        return cls(
            nearest=np.full(n, -1, dtype=np.int64),
            distance=np.full(n, np.inf),
            valid=np.zeros(n, dtype=bool),
            radar_is_dynamic=np.zeros(n, dtype=bool),
        )


def range_adaptive_threshold(
    points: np.ndarray, config: PipelineConfig
) -> float | np.ndarray:
    """Association gate growing linearly with range, saturating at ``adaptive_range_ref``.

    delta(p) = delta_min + (delta_max - delta_min) * min(|p| / R_ref, 1)
    Accepts one 3-vector (returns a float) or an (N, 3) array.
    """
    points = np.asarray(points, dtype=np.float64)
    ranges = np.linalg.norm(points, axis=-1)
    fraction = np.minimum(ranges / config.adaptive_range_ref, 1.0)
    gate = config.delta_adaptive_min + (
        config.delta_adaptive_max - config.delta_adaptive_min
    ) * fraction
    return float(gate) if points.ndim == 1 else gate


def associate(
    lidar_positions: np.ndarray,
    radar_positions: np.ndarray,
    radar_dynamic: np.ndarray,
    config: PipelineConfig,
    query_indices: np.ndarray | None = None,
) -> Association:
    """Associate LiDAR points to their nearest radar point (dynamic or static).

    Only ``query_indices`` are associated (default: all points); the table
    still has one entry per LiDAR point. A match is valid when strictly closer
    than the range-adaptive gate of the LiDAR point.
    """
    lidar_positions = np.asarray(lidar_positions, dtype=np.float64).reshape(-1, 3)
    radar_positions = np.asarray(radar_positions, dtype=np.float64).reshape(-1, 3)
    n = len(lidar_positions)
    table = Association.empty(n)
    if len(radar_positions) == 0:
        logger.warning("empty radar frame: every association is invalid, output will be static")
        return table

    queried = np.arange(n) if query_indices is None else np.asarray(query_indices, dtype=np.int64)
    if len(queried) == 0:
        return table

    distance, nearest = cKDTree(radar_positions).query(lidar_positions[queried], k=1)
    gate = range_adaptive_threshold(lidar_positions[queried], config)

    nearest_all = table.nearest.copy()
    distance_all = table.distance.copy()
    valid_all = table.valid.copy()
    dynamic_all = table.radar_is_dynamic.copy()
    nearest_all[queried] = nearest
    distance_all[queried] = distance
    valid_all[queried] = distance < gate
    dynamic_all[queried] = np.asarray(radar_dynamic, dtype=bool)[nearest]
    return Association(nearest_all, distance_all, valid_all, dynamic_all)
