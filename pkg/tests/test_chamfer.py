"""Tests for the one-sided Chamfer distance (transfer/chamfer.py)."""

import numpy as np
import pytest

from radar_flow_labels.exceptions import ReferenceFrameError
from radar_flow_labels.transfer import ChamferTarget, chamfer_distance


class TestChamferDistance:
    """Mean nearest-neighbor distance from source to target."""

    def test_identical_sets(self):
        """A set scores zero against itself."""
        points = np.random.default_rng(0).uniform(-5, 5, (50, 3))
        assert chamfer_distance(points, points) == 0.0

    def test_single_pair(self):
        """One point against one point is their distance."""
        assert chamfer_distance(np.zeros((1, 3)), np.array([[1.0, 0.0, 0.0]])) == pytest.approx(1.0)

    def test_mean_of_distances(self):
        """The score is the mean of per-point nearest distances."""
        source = np.array([[0.1, 0.0, 0.0], [10.2, 0.0, 0.0], [20.3, 0.0, 0.0]])
        target = np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [20.0, 0.0, 0.0]])
        assert chamfer_distance(source, target) == pytest.approx(0.2)

    def test_one_sided(self):
        """Extra target points do not raise the score."""
        source = np.zeros((1, 3))
        target = np.array([[0.0, 0.0, 0.0], [100.0, 0.0, 0.0]])
        assert chamfer_distance(source, target) == 0.0

    def test_empty_target(self):
        """An empty target means there is no reference frame."""
        with pytest.raises(ReferenceFrameError, match="no reference frame"):
            chamfer_distance(np.zeros((1, 3)), np.zeros((0, 3)))

    def test_empty_source(self):
        """An empty source has no mean."""
        with pytest.raises(ValueError):
            chamfer_distance(np.zeros((0, 3)), np.zeros((1, 3)))

    def test_reusable_target(self):
        """A prebuilt target scores the same as passing raw points."""
        target = ChamferTarget(np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]))
        assert len(target) == 2
        assert target.distance(np.array([[1.0, 0.0, 0.0]])) == pytest.approx(1.0)
        assert chamfer_distance(np.array([[3.0, 0.5, 0.0]]), target) == pytest.approx(0.5)
