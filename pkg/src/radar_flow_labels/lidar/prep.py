"""LiDAR frame preparation: ground removal, intensity split, clustering.

The clustering input set is chosen by the caller (label transfer decides
which points are trustworthy enough to cluster); this module only provides
the preparation steps and the container that carries their results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..config import PipelineConfig
from ..models import LidarCluster, LidarFrame
from .clustering import density_labels, reattach_low_intensity
from .ground import remove_ground, split_by_intensity


@dataclass(frozen=True)
class PreparedLidarFrame:
    """Index sets describing one prepared LiDAR frame.

    Invariants: ``high_set`` and ``low_set`` partition ``kept_indices``; every
    frame index is in exactly one of ground, ``unclustered`` or a cluster.
    """

    frame: LidarFrame
    kept_indices: np.ndarray
    ground_indices: np.ndarray
    high_set: np.ndarray
    low_set: np.ndarray
    clusters: list[LidarCluster]
    unclustered: np.ndarray

    def cluster_of_point(self) -> np.ndarray:
        """Cluster id per frame index, -1 when unclustered or ground."""
        labels = np.full(len(self.frame), -1, dtype=np.int64)
        for cluster in self.clusters:
            labels[cluster.member_indices] = cluster.cluster_id
        return labels


def preprocess_lidar(frame: LidarFrame, config: PipelineConfig) -> PreparedLidarFrame:
    """Ground removal and intensity split; no clusters yet."""
    kept, ground = remove_ground(
        frame.positions, config.ground_cell_size, config.ground_height_tol
    )
    high, low = split_by_intensity(kept, frame.intensity, config.delta_intensity)
    return PreparedLidarFrame(
        frame=frame,
        kept_indices=kept,
        ground_indices=ground,
        high_set=high,
        low_set=low,
        clusters=[],
        unclustered=kept.copy(),
    )


def cluster_prepared(
    prepared: PreparedLidarFrame,
    cluster_input: np.ndarray,
    config: PipelineConfig,
) -> PreparedLidarFrame:
    """Density-cluster ``cluster_input`` and reattach the remaining low-intensity points.

    ``cluster_input`` must be a subset of ``prepared.kept_indices``. Low-intensity
    kept points outside it are attached to the nearest clustered point within
    ``delta_neighbor``; everything else stays unclustered.
    """
    positions = prepared.frame.positions
    cluster_input = np.sort(np.asarray(cluster_input, dtype=np.int64))
    labels = np.full(len(prepared.frame), -1, dtype=np.int64)

    density = density_labels(
        positions[cluster_input], config.density_cluster_eps, config.density_cluster_min_pts
    )
    labels[cluster_input] = density.labels

    clustered = cluster_input[density.labels >= 0]
    pending_low = np.setdiff1d(prepared.low_set, cluster_input, assume_unique=True)
    attached = reattach_low_intensity(
        positions[pending_low],
        positions[clustered],
        clustered,
        labels[clustered],
        config.delta_neighbor,
    )
    labels[pending_low] = attached

    clusters = [
        LidarCluster(cluster_id=cid, member_indices=np.flatnonzero(labels == cid).tolist())
        for cid in range(density.n_clusters)
    ]
    in_cluster = labels >= 0
    unclustered = prepared.kept_indices[~in_cluster[prepared.kept_indices]]
    return replace(prepared, clusters=clusters, unclustered=unclustered)
