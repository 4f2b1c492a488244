"""Radar motion estimation for one frame: compensate, gate, cluster, solve."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import PipelineConfig
from ..models import EgoState, RadarCluster, RadarFrame
from .ccl import ccl_cluster
from .doppler import CompensatedRadarFrame, classify_dynamic, compensate_frame
from .solver import solve_bounded_velocity

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadarMotion:
    """Radar-side result consumed by label transfer.

    ``point_cluster`` maps each radar point to its cluster id (-1 for static
    points) and ``point_velocity`` carries the cluster's v_full per point.
    """

    compensated: CompensatedRadarFrame
    dynamic_indices: np.ndarray
    clusters: list[RadarCluster]
    point_cluster: np.ndarray
    point_velocity: np.ndarray

    @property
    def dynamic_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.compensated), dtype=bool)
        mask[self.dynamic_indices] = True
        return mask

    def cluster_velocities(self) -> np.ndarray:
        """(K, 3) solved velocities in cluster-id order."""
        if not self.clusters:
            return np.zeros((0, 3))
        return np.array([c.v_full for c in self.clusters], dtype=np.float64)


def estimate_radar_motion(
    radar: RadarFrame, ego: EgoState, config: PipelineConfig
) -> RadarMotion:
    """Find moving radar clusters and their full 3D velocities."""
    compensated = compensate_frame(radar, ego, config.min_sensor_range)
    dynamic = classify_dynamic(compensated, config.delta_dyn)

    groups = ccl_cluster(
        compensated.radar.positions[dynamic],
        compensated.v_comp_vec[dynamic],
        config.delta_spatial,
        config.delta_velocity,
        indices=dynamic,
    )

    clusters: list[RadarCluster] = []
    point_cluster = np.full(len(radar), -1, dtype=np.int64)
    point_velocity = np.zeros((len(radar), 3))
    for cluster_id, members in enumerate(groups):
        solution = solve_bounded_velocity(
            compensated.rows[members],
            compensated.v_comp[members],
            config.v_bound,
            config.rank_tol,
        )
        clusters.append(
            RadarCluster(
                cluster_id=cluster_id,
                member_indices=members.tolist(),
                v_full=tuple(solution.v_full.tolist()),
                solve_residual=solution.residual,
                rank_deficient=solution.rank_deficient,
            )
        )
        point_cluster[members] = cluster_id
        point_velocity[members] = solution.v_full

    logger.debug(
        "radar frame %d: %d/%d dynamic points in %d cluster(s)",
        radar.frame_index, len(dynamic), len(radar), len(clusters),
    )
    return RadarMotion(compensated, dynamic, clusters, point_cluster, point_velocity)
