"""One-sided Chamfer distance from a (warped) cluster to the next scan."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..exceptions import ReferenceFrameError


class ChamferTarget:
    """KD-tree over the next scan, built once and queried for every candidate."""

    def __init__(self, points: np.ndarray):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(points) == 0:
            raise ReferenceFrameError("no reference frame: the next scan is empty")
        self.points = points
        self._tree = cKDTree(points)

    def __len__(self) -> int:
        return len(self.points)

    def distance(self, source: np.ndarray) -> float:
        """Mean distance from each source point to its nearest target point."""
        source = np.asarray(source, dtype=np.float64).reshape(-1, 3)
        if len(source) == 0:
            raise ValueError("Chamfer source set is empty")
        nearest, _ = self._tree.query(source, k=1)
        return float(np.mean(nearest))


def chamfer_distance(source: np.ndarray, target: np.ndarray | ChamferTarget) -> float:
    """One-sided Chamfer distance: source -> target, in meters."""
    if not isinstance(target, ChamferTarget):
        target = ChamferTarget(target)
    return target.distance(source)
