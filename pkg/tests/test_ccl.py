"""Tests for connected-components clustering of dynamic radar points (radar/ccl.py)."""

import numpy as np

from radar_flow_labels.radar.ccl import ccl_cluster, component_labels, radar_edges


def _brute_force_components(positions, vectors, ds, dv) -> list[list[int]]:
    """Transitive closure of the dense adjacency matrix, components by smallest member."""
    n = len(positions)
    spatial = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=2)
    velocity = np.linalg.norm(vectors[:, None, :] - vectors[None, :, :], axis=2)
    reach = ((spatial < ds) & (velocity < dv)) | np.eye(n, dtype=bool)
    while True:
        grown = (reach.astype(np.float64) @ reach.astype(np.float64)) > 0
        if np.array_equal(grown, reach):
            break
        reach = grown
    components = []
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if not seen[i]:
            members = np.flatnonzero(reach[i])
            seen[members] = True
            components.append(members.tolist())
    return components


class TestCclExamples:
    """Hand-checked configurations."""

    def test_close_pair_is_one_cluster(self):
        """Close returns with similar velocity share a cluster."""
        positions = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        vectors = np.array([[10.0, 0.0, 0.0], [10.5, 0.0, 0.0]])
        clusters = ccl_cluster(positions, vectors, 3.0, 1.5)
        assert [c.tolist() for c in clusters] == [[0, 1]]

    def test_far_pair_splits(self):
        """Returns beyond delta_spatial stay apart."""
        positions = np.array([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0]])
        vectors = np.zeros((2, 3))
        assert [c.tolist() for c in ccl_cluster(positions, vectors, 3.0, 1.5)] == [[0], [1]]

    def test_velocity_gap_splits(self):
        """Adjacent returns moving in opposite directions stay apart."""
        positions = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        vectors = np.array([[10.0, 0.0, 0.0], [-10.0, 0.0, 0.0]])
        assert len(ccl_cluster(positions, vectors, 3.0, 1.5)) == 2

    def test_chain_is_transitive(self):
        """A-B and B-C linked, A-C too far apart: still one cluster."""
        positions = np.array([[0.0, 0.0, 0.0], [2.5, 0.0, 0.0], [5.0, 0.0, 0.0]])
        vectors = np.zeros((3, 3))
        edges = radar_edges(positions, vectors, 3.0, 1.5)
        assert edges.tolist() == [[0, 1], [1, 2]]
        assert [c.tolist() for c in ccl_cluster(positions, vectors, 3.0, 1.5)] == [[0, 1, 2]]

    def test_thresholds_are_strict(self):
        """A pair exactly delta_spatial apart is not linked."""
        positions = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
        assert len(radar_edges(positions, np.zeros((2, 3)), 3.0, 1.5)) == 0

    def test_indices_map_back(self):
        """Cluster members are reported in the caller's index space."""
        positions = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.5, 0.0, 0.0]])
        clusters = ccl_cluster(positions, np.zeros((3, 3)), 3.0, 1.5, indices=np.array([4, 7, 9]))
        assert [c.tolist() for c in clusters] == [[4, 9], [7]]

    def test_empty_and_single(self):
        """No returns give no clusters and a lone return is a singleton."""
        assert ccl_cluster(np.zeros((0, 3)), np.zeros((0, 3)), 3.0, 1.5) == []
        clusters = ccl_cluster(np.array([[1.0, 2.0, 3.0]]), np.zeros((1, 3)), 3.0, 1.5)
        assert [c.tolist() for c in clusters] == [[0]]


class TestComponentLabels:
    """Label numbering follows the smallest node of each component."""

    def test_numbering(self):
        """Component ids are assigned in order of each component's smallest node."""
        labels = component_labels(5, np.array([[3, 4], [1, 3]]))
        assert labels.tolist() == [0, 1, 2, 1, 1]

    def test_no_edges(self):
        """Without edges every node is its own component."""
        assert component_labels(3, np.zeros((0, 2))).tolist() == [0, 1, 2]


class TestCclOracle:
    """ccl_cluster equals a dense transitive-closure reference."""

    def test_random_instances(self):
        """Random scenes cluster exactly like the dense reference."""
        rng = np.random.default_rng(20240601)
        for _ in range(200):
            n = int(rng.integers(1, 501))
            side = 4.0 * np.cbrt(n)
            positions = rng.uniform(0.0, side, (n, 3))
            vectors = rng.uniform(-1.5, 1.5, (n, 3))
            clusters = ccl_cluster(positions, vectors, 3.0, 1.5)
            expected = _brute_force_components(positions, vectors, 3.0, 1.5)
            assert [c.tolist() for c in clusters] == expected

            flat = np.concatenate(clusters)
            assert sorted(flat.tolist()) == list(range(n))
