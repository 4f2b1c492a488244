"""Radar-to-LiDAR label propagation.

For every LiDAR cluster: vote whether it is dynamic from the radar points its
members are associated with, collect the distinct velocities of the radar
clusters it reaches, resolve ambiguity by forward-projecting the cluster and
scoring each candidate against the next scan, then write v_best * dt onto all
members. Everything not labeled dynamic keeps zero non-ego flow.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import PipelineConfig
from ..lidar.prep import PreparedLidarFrame
from ..models import EgoState, FlowField, LidarCluster
from ..radar.motion import RadarMotion
from .association import Association
from .chamfer import ChamferTarget

logger = logging.getLogger(__name__)

MAJORITY = 0.5


@dataclass(frozen=True)
class Resolution:
    """Outcome of velocity arbitration for one cluster."""

    index: int
    velocity: np.ndarray
    scores: tuple[float, ...]


def clustering_input(prepared: PreparedLidarFrame, association: Association) -> np.ndarray:
    """Points to density-cluster: all high-intensity kept points plus associated low ones."""
    low_associated = prepared.low_set[association.valid[prepared.low_set]]
    return np.union1d(prepared.high_set, low_associated)


def vote_cluster_dynamic(cluster: LidarCluster, association: Association) -> bool:
    """Strict majority of validly associated members must hit dynamic radar points.

    Clusters without any valid association are static.
    """
    members = np.asarray(cluster.member_indices, dtype=np.int64)
    valid = association.valid[members]
    n_valid = int(valid.sum())
    if n_valid == 0:
        return False
    n_dynamic = int((valid & association.radar_is_dynamic[members]).sum())
    return n_dynamic / n_valid > MAJORITY


def candidate_velocities(
    cluster: LidarCluster,
    association: Association,
    motion: RadarMotion,
    dedup_tol: float = 1e-6,
) -> tuple[list[int], np.ndarray]:
    """Distinct velocities of the radar clusters reached by the cluster's valid associations.

    Returns (radar cluster ids, (K, 3) velocities) in ascending cluster-id order;
    a velocity within ``dedup_tol`` (per axis) of an earlier one is dropped.
    """
    members = np.asarray(cluster.member_indices, dtype=np.int64)
    radar_hits = association.radar_index[members]
    radar_hits = radar_hits[radar_hits >= 0]
    reached = np.unique(motion.point_cluster[radar_hits])
    reached = reached[reached >= 0]

    ids: list[int] = []
    velocities: list[np.ndarray] = []
    for cluster_id in reached.tolist():
        v = motion.clusters[cluster_id].velocity
        if any(np.max(np.abs(v - kept)) <= dedup_tol for kept in velocities):
            continue
        ids.append(cluster_id)
        velocities.append(v)
    return ids, np.array(velocities, dtype=np.float64).reshape(-1, 3)


def resolve_velocity_ambiguity(
    cluster_points: np.ndarray,
    candidates: np.ndarray,
    next_frame: np.ndarray | ChamferTarget,
    dt: float,
    tie_tol: float = 1e-9,
) -> Resolution:
    """Pick the candidate whose forward projection best matches the next scan.

    A single candidate is returned without scoring. Scores within ``tie_tol``
    of the best go to the lower-index candidate.
    """
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 3)
    if len(candidates) == 0:
        raise ValueError("at least one candidate velocity is required")
    if len(candidates) == 1:
        return Resolution(0, candidates[0], ())

    target = next_frame if isinstance(next_frame, ChamferTarget) else ChamferTarget(next_frame)
    cluster_points = np.asarray(cluster_points, dtype=np.float64).reshape(-1, 3)
    scores = tuple(target.distance(cluster_points + v * dt) for v in candidates)
    best = min(scores)
    index = next(i for i, s in enumerate(scores) if s <= best + tie_tol)
    return Resolution(index, candidates[index], scores)


def propagate_labels(
    prepared: PreparedLidarFrame,
    motion: RadarMotion,
    association: Association,
    next_frame: np.ndarray,
    config: PipelineConfig,
    dt: float,
) -> tuple[FlowField, list[LidarCluster]]:
    """Turn clustered LiDAR points plus radar motion into a dense non-ego flow field.

    ``next_frame`` must already be expressed in frame t's ego coordinates.
    Returns the flow field and the clusters with their dynamic labels filled in.
    """
    positions = prepared.frame.positions
    n = len(positions)
    delta = np.zeros((n, 3))
    dynamic = np.zeros(n, dtype=bool)
    valid = association.valid.copy()
    cluster_id = prepared.cluster_of_point()

    target: ChamferTarget | None = None
    labeled: list[LidarCluster] = []
    for cluster in prepared.clusters:
        members = np.asarray(cluster.member_indices, dtype=np.int64)
        if association.valid[members].any():
            valid[members] = True

        source_ids, velocities = candidate_velocities(
            cluster, association, motion, config.velocity_dedup_tol
        )
        if not vote_cluster_dynamic(cluster, association) or len(velocities) == 0:
            labeled.append(cluster.model_copy(update={"source_radar_clusters": source_ids}))
            continue

        if len(velocities) > 1 and target is None:
            target = ChamferTarget(next_frame)
        resolution = resolve_velocity_ambiguity(
            positions[members], velocities, target, dt, config.chamfer_tie_tol
        )
        if resolution.scores:
            logger.debug(
                "cluster %d: %d candidates, chose %d (scores %s)",
                cluster.cluster_id, len(velocities), resolution.index,
                ", ".join(f"{s:.4f}" for s in resolution.scores),
            )

        step = resolution.velocity * dt
        delta[members] = step
        dynamic[members] = True
        labeled.append(
            LidarCluster(
                cluster_id=cluster.cluster_id,
                member_indices=cluster.member_indices,
                dynamic=True,
                assigned_velocity=tuple(resolution.velocity.tolist()),
                source_radar_clusters=source_ids,
            )
        )

    flow = FlowField(delta=delta, dynamic=dynamic, valid=valid, cluster_id=cluster_id)
    return flow, labeled


def align_next_frame(points_t1: np.ndarray, ego: EgoState) -> np.ndarray:
    """Express next-frame points in frame t's ego coordinates (T_ego * p)."""
    return ego.apply_ego_transform(points_t1)


def assemble_total_flow(flow: FlowField, ego: EgoState, positions: np.ndarray) -> np.ndarray:
    """Total flow = rigid ego displacement (T_ego * p - p) + non-ego delta."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(positions) != len(flow):
        raise ValueError("flow field and point array differ in length")
    return (ego.apply_ego_transform(positions) - positions) + flow.delta
