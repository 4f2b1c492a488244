"""Density clustering of LiDAR points and low-intensity reattachment.

Density clustering uses fixed-radius DBSCAN semantics:

* the eps-neighborhood of a point includes the point itself (distance <= eps);
* a point is core when its neighborhood holds at least ``min_pts`` points;
* clusters are connected components of core points linked within eps;
* a non-core point with a core neighbor is a border point and joins the
  cluster of its nearest core neighbor (ties go to the smaller index);
* everything else is noise.

Cluster order is the order of each cluster's smallest core point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..radar.ccl import component_labels

NEAREST_TIE_TOL = 1e-9


@dataclass(frozen=True)
class DensityClustering:
    """Per-row labels (-1 = noise) for the clustered rows."""

    labels: np.ndarray
    core: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) and self.labels.max() >= 0 else 0

    @property
    def noise(self) -> np.ndarray:
        return np.flatnonzero(self.labels < 0)

    def members(self, indices: np.ndarray | None = None) -> list[np.ndarray]:
        """Member arrays per cluster, mapped through ``indices`` when given."""
        rows = np.arange(len(self.labels)) if indices is None else np.asarray(indices)
        return [rows[self.labels == label] for label in range(self.n_clusters)]


def density_labels(positions: np.ndarray, eps: float, min_pts: int) -> DensityClustering:
    """Label every row of ``positions`` with a cluster id or -1 for noise."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(positions)
    if n == 0:
        return DensityClustering(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool))

    pairs = cKDTree(positions).query_pairs(eps, output_type="ndarray").reshape(-1, 2)
    counts = 1 + np.bincount(pairs.ravel(), minlength=n)
    core = counts >= min_pts

    labels = np.full(n, -1, dtype=np.int64)
    core_rows = np.flatnonzero(core)
    if len(core_rows) == 0:
        return DensityClustering(labels, core)

    # Components over core-core links, in core-row space
    position_in_core = np.full(n, -1, dtype=np.int64)
    position_in_core[core_rows] = np.arange(len(core_rows))
    both_core = core[pairs[:, 0]] & core[pairs[:, 1]]
    core_edges = position_in_core[pairs[both_core]]
    labels[core_rows] = component_labels(len(core_rows), core_edges)

    # Border rows: nearest core neighbor, ties to the smaller core index
    mixed = core[pairs[:, 0]] ^ core[pairs[:, 1]]
    if mixed.any():
        mixed_pairs = pairs[mixed]
        first_is_core = core[mixed_pairs[:, 0]]
        core_side = np.where(first_is_core, mixed_pairs[:, 0], mixed_pairs[:, 1])
        border_side = np.where(first_is_core, mixed_pairs[:, 1], mixed_pairs[:, 0])
        distance = np.linalg.norm(positions[core_side] - positions[border_side], axis=1)
        order = np.lexsort((core_side, distance, border_side))
        border_sorted = border_side[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = border_sorted[1:] != border_sorted[:-1]
        labels[border_sorted[first]] = labels[core_side[order][first]]

    return DensityClustering(labels, core)


def density_cluster(
    positions: np.ndarray,
    eps: float,
    min_pts: int,
    indices: np.ndarray | None = None,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Cluster points; returns (member arrays per cluster, noise indices).

    ``indices`` maps rows back to frame indices (defaults to 0..N-1).
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    rows = np.arange(len(positions)) if indices is None else np.asarray(indices, dtype=np.int64)
    result = density_labels(positions, eps, min_pts)
    return result.members(rows), rows[result.noise]


def reattach_low_intensity(
    low_positions: np.ndarray,
    clustered_positions: np.ndarray,
    clustered_indices: np.ndarray,
    clustered_labels: np.ndarray,
    delta_neighbor: float,
) -> np.ndarray:
    """Cluster label for each low-intensity point, or -1 if none is close enough.

    A low point joins the cluster of its nearest clustered point when that point
    is strictly closer than ``delta_neighbor``. Equidistant candidates (to 1e-9)
    resolve to the one with the smaller frame index.
    """
    low_positions = np.asarray(low_positions, dtype=np.float64).reshape(-1, 3)
    result = np.full(len(low_positions), -1, dtype=np.int64)
    if len(low_positions) == 0 or len(clustered_positions) == 0:
        return result

    clustered_indices = np.asarray(clustered_indices, dtype=np.int64)
    clustered_labels = np.asarray(clustered_labels, dtype=np.int64)
    tree = cKDTree(np.asarray(clustered_positions, dtype=np.float64).reshape(-1, 3))
    distance, nearest = tree.query(low_positions, k=1)

    for row in np.flatnonzero(distance < delta_neighbor):
        candidates = tree.query_ball_point(low_positions[row], distance[row] + NEAREST_TIE_TOL)
        if len(candidates) > 1:
            best = min(candidates, key=lambda c: clustered_indices[c])
        else:
            best = nearest[row]
        result[row] = clustered_labels[best]
    return result
