"""Connected-components clustering of dynamic radar points.

Two points are linked when they are closer than ``delta_spatial`` in space AND
their Doppler velocity vectors (v_comp * u) differ by less than
``delta_velocity``. Clusters are the connected components of that graph.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


def radar_edges(
    positions: np.ndarray,
    velocity_vectors: np.ndarray,
    delta_spatial: float,
    delta_velocity: float,
) -> np.ndarray:
    """(E, 2) array of index pairs i < j satisfying both strict thresholds."""
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    velocity_vectors = np.asarray(velocity_vectors, dtype=np.float64).reshape(-1, 3)
    if len(positions) < 2:
        return np.zeros((0, 2), dtype=np.int64)

    # The KD-tree only prefilters (it uses <=); the exact strict tests follow
    pairs = cKDTree(positions).query_pairs(delta_spatial, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    i, j = pairs[:, 0], pairs[:, 1]
    spatial = np.linalg.norm(positions[i] - positions[j], axis=1)
    velocity = np.linalg.norm(velocity_vectors[i] - velocity_vectors[j], axis=1)
    keep = (spatial < delta_spatial) & (velocity < delta_velocity)
    edges = np.sort(pairs[keep], axis=1)
    return edges[np.lexsort((edges[:, 1], edges[:, 0]))]


def component_labels(n: int, edges: np.ndarray) -> np.ndarray:
    """Component label per node, numbered by each component's smallest node index."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    graph = coo_matrix(
        (np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n)
    ).tocsr()
    _, raw = connected_components(graph, directed=False)

    first_seen: dict[int, int] = {}
    labels = np.empty(n, dtype=np.int64)
    for node, label in enumerate(raw):
        labels[node] = first_seen.setdefault(int(label), len(first_seen))
    return labels


def ccl_cluster(
    positions: np.ndarray,
    velocity_vectors: np.ndarray,
    delta_spatial: float,
    delta_velocity: float,
    indices: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Cluster dynamic radar points; returns member index arrays.

    ``indices`` maps rows of ``positions`` back to radar-frame indices (defaults
    to 0..N-1). Every input point lands in exactly one cluster; singletons are
    kept. Clusters are ordered by their smallest row.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(positions)
    if indices is None:
        indices = np.arange(n)
    indices = np.asarray(indices, dtype=np.int64)

    labels = component_labels(
        n, radar_edges(positions, velocity_vectors, delta_spatial, delta_velocity)
    )
    return [indices[labels == label] for label in range(int(labels.max()) + 1 if n else 0)]
