"""Grid-lowest-point ground removal and intensity split."""

from __future__ import annotations

import numpy as np


def remove_ground(
    positions: np.ndarray, cell_size: float = 1.0, height_tol: float = 0.3
) -> tuple[np.ndarray, np.ndarray]:
    """Split points into (kept, ground) index arrays.

    Points are binned into square XY cells of ``cell_size``. Within a cell, every
    point no higher than ``height_tol`` above the cell's lowest point is ground.
    A lone point in a cell is its own lowest point and therefore ground.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    if len(positions) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty

    cells = np.floor(positions[:, :2] / cell_size).astype(np.int64)
    _, cell_of_point = np.unique(cells, axis=0, return_inverse=True)
    cell_of_point = cell_of_point.reshape(-1)

    lowest = np.full(cell_of_point.max() + 1, np.inf)
    np.minimum.at(lowest, cell_of_point, positions[:, 2])

    is_ground = positions[:, 2] - lowest[cell_of_point] <= height_tol
    return np.flatnonzero(~is_ground), np.flatnonzero(is_ground)


def split_by_intensity(
    indices: np.ndarray, intensity: np.ndarray, delta_intensity: float
) -> tuple[np.ndarray, np.ndarray]:
    """Partition ``indices`` into (high, low); high means intensity >= delta."""
    indices = np.asarray(indices, dtype=np.int64)
    high = np.asarray(intensity)[indices] >= delta_intensity
    return indices[high], indices[~high]
