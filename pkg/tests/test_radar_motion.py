"""Tests for per-frame radar motion estimation (radar/motion.py)."""

import numpy as np

from radar_flow_labels.config import PipelineConfig
from radar_flow_labels.models import EgoState, RadarFrame, SensorExtrinsic
from radar_flow_labels.radar import estimate_radar_motion

V_EGO = np.array([10.0, 0.0, 0.0])


def _make_ego() -> EgoState:
    return EgoState(
        v_ego=tuple(V_EGO), dt=0.1, sensor_extrinsics=[SensorExtrinsic.from_yaw(0.0)]
    )


def _make_body_returns(
    rng: np.random.Generator, center, velocity, n: int = 10, spread: float = 0.75
) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free returns from a rigid body seen by a sensor at the ego origin."""
    positions = np.asarray(center) + rng.uniform(-spread, spread, (n, 3))
    los = positions / np.linalg.norm(positions, axis=1, keepdims=True)
    v_meas = los @ (np.asarray(velocity) - V_EGO)
    return positions, v_meas


def _make_frame(parts: list[tuple[np.ndarray, np.ndarray]]) -> RadarFrame:
    positions = np.concatenate([p for p, _ in parts])
    v_meas = np.concatenate([v for _, v in parts])
    return RadarFrame(positions, v_meas, np.zeros(len(positions), dtype=np.int64))


class TestEstimateRadarMotion:
    """Compensate, gate, cluster and solve in one call."""

    def test_two_movers_recovered(self):
        """Two movers get exact velocities and static returns stay unclustered."""
        rng = np.random.default_rng(4)
        truth_a = np.array([15.0, 0.0, 0.0])
        truth_b = np.array([5.0, 10.0, 0.0])
        radar = _make_frame(
            [
                _make_body_returns(rng, (25.0, 4.0, 1.0), truth_a),
                _make_body_returns(rng, (15.0, -10.0, 1.0), truth_b),
                _make_body_returns(rng, (30.0, -25.0, 0.5), (0.0, 0.0, 0.0), n=5),
            ]
        )
        motion = estimate_radar_motion(radar, _make_ego(), PipelineConfig())

        assert len(motion.clusters) == 2
        assert motion.clusters[0].member_indices == list(range(10))
        assert motion.clusters[1].member_indices == list(range(10, 20))
        np.testing.assert_allclose(motion.clusters[0].velocity, truth_a, atol=1e-6)
        np.testing.assert_allclose(motion.clusters[1].velocity, truth_b, atol=1e-6)
        assert not motion.clusters[0].rank_deficient

        # Static returns stay out of every cluster
        assert (motion.point_cluster[20:] == -1).all()
        np.testing.assert_allclose(motion.point_velocity[20:], 0.0)
        np.testing.assert_allclose(motion.point_velocity[:10], np.tile(truth_a, (10, 1)), atol=1e-6)
        assert motion.dynamic_mask.sum() == 20
        assert motion.cluster_velocities().shape == (2, 3)

    def test_all_static(self):
        """A parked body yields no clusters."""
        rng = np.random.default_rng(8)
        radar = _make_frame([_make_body_returns(rng, (20.0, 5.0, 1.0), (0.0, 0.0, 0.0))])
        motion = estimate_radar_motion(radar, _make_ego(), PipelineConfig())
        assert motion.clusters == []
        assert len(motion.dynamic_indices) == 0
        assert motion.cluster_velocities().shape == (0, 3)

    def test_far_ghost_is_a_singleton(self):
        """A lone far return forms its own rank-deficient cluster."""
        rng = np.random.default_rng(9)
        ghost = (np.array([[60.0, -30.0, 1.0]]), np.array([-20.0]))
        radar = _make_frame(
            [_make_body_returns(rng, (25.0, 4.0, 1.0), (15.0, 0.0, 0.0)), ghost]
        )
        motion = estimate_radar_motion(radar, _make_ego(), PipelineConfig())
        assert len(motion.clusters) == 2
        assert motion.clusters[1].member_indices == [10]
        assert motion.clusters[1].rank_deficient

    def test_empty_frame(self):
        """An empty radar frame gives empty motion."""
        motion = estimate_radar_motion(RadarFrame.empty(), _make_ego(), PipelineConfig())
        assert motion.clusters == []
        assert len(motion.point_cluster) == 0

    def test_return_order_does_not_matter(self):
        """Shuffling the returns shuffles the per-return results and nothing else."""
        rng = np.random.default_rng(12)
        radar = _make_frame(
            [
                _make_body_returns(rng, (25.0, 4.0, 1.0), (15.0, 0.0, 0.0)),
                _make_body_returns(rng, (15.0, -10.0, 1.0), (5.0, 10.0, 0.0)),
                _make_body_returns(rng, (30.0, -25.0, 0.5), (0.0, 0.0, 0.0), n=5),
            ]
        )
        perm = rng.permutation(len(radar.positions))
        motion = estimate_radar_motion(radar, _make_ego(), PipelineConfig())
        shuffled = estimate_radar_motion(radar.subset(perm), _make_ego(), PipelineConfig())

        np.testing.assert_allclose(
            shuffled.compensated.v_comp, motion.compensated.v_comp[perm], atol=1e-9
        )
        np.testing.assert_array_equal(shuffled.dynamic_mask, motion.dynamic_mask[perm])
        np.testing.assert_allclose(shuffled.point_velocity, motion.point_velocity[perm], atol=1e-9)
        assert len(shuffled.clusters) == len(motion.clusters)
        # Cluster ids may be renumbered; membership may not
        same_cluster = motion.point_cluster[:, None] == motion.point_cluster[None, :]
        shuffled_same = shuffled.point_cluster[:, None] == shuffled.point_cluster[None, :]
        np.testing.assert_array_equal(shuffled_same, same_cluster[np.ix_(perm, perm)])
