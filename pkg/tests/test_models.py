"""Tests for the core data models (models.py)."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from radar_flow_labels.models import (
    CLASS_CODES,
    CLASS_NAMES,
    EgoState,
    FlowField,
    FrameTimings,
    GroundTruth,
    LidarCluster,
    LidarFrame,
    LidarPoint,
    RadarCluster,
    RadarFrame,
    RadarPoint,
    RunManifest,
    SensorExtrinsic,
)


class TestRadarPoint:
    """Per-point radar model validation."""

    def test_valid_point(self):
        """A finite off-origin return validates and defaults to frame 0."""
        point = RadarPoint(position=(10.0, 0.0, 0.5), v_meas=-3.0, sensor_id=0)
        assert point.v_meas == -3.0
        assert point.frame_index == 0

    def test_rejects_non_finite_position(self):
        """NaN coordinates are rejected."""
        with pytest.raises(ValidationError):
            RadarPoint(position=(math.nan, 0.0, 0.0), v_meas=0.0, sensor_id=0)

    def test_rejects_origin(self):
        """A return sitting on the origin has no line of sight."""
        with pytest.raises(ValidationError, match="origin"):
            RadarPoint(position=(0.0, 0.0, 0.0), v_meas=0.0, sensor_id=0)

    def test_rejects_negative_sensor_id(self):
        """Sensor ids index the extrinsics table and cannot be negative."""
        with pytest.raises(ValidationError):
            RadarPoint(position=(1.0, 0.0, 0.0), v_meas=0.0, sensor_id=-1)


class TestLidarPoint:
    """Per-point LiDAR model validation."""

    def test_intensity_bounds(self):
        """Intensity is accepted on the closed unit interval only."""
        LidarPoint(position=(1.0, 2.0, 3.0), intensity=0.0)
        LidarPoint(position=(1.0, 2.0, 3.0), intensity=1.0)
        with pytest.raises(ValidationError):
            LidarPoint(position=(1.0, 2.0, 3.0), intensity=1.5)

    def test_rejects_infinite_position(self):
        """Infinite coordinates are rejected."""
        with pytest.raises(ValidationError):
            LidarPoint(position=(math.inf, 0.0, 0.0), intensity=0.5)


class TestSensorExtrinsic:
    """Yaw-mounted extrinsics."""

    def test_zero_yaw_is_identity(self):
        """Zero yaw gives the identity rotation."""
        extrinsic = SensorExtrinsic.from_yaw(0.0)
        np.testing.assert_allclose(extrinsic.matrix, np.eye(3))

    def test_ninety_degree_yaw_maps_left_to_boresight(self):
        """A sensor yawed 90 degrees looks along ego +y."""
        extrinsic = SensorExtrinsic.from_yaw(90.0, (0.0, 1.0, 0.5))
        local = extrinsic.matrix @ np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(local, [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(extrinsic.origin, [0.0, 1.0, 0.5])

    def test_rotation_is_proper(self):
        """Any yaw gives an orthonormal rotation with determinant one."""
        matrix = SensorExtrinsic.from_yaw(37.0).matrix
        np.testing.assert_allclose(matrix @ matrix.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(matrix) == pytest.approx(1.0)


class TestEgoState:
    """Ego motion and the extrinsics table."""

    def test_ego_transform_is_translation(self):
        """Without yaw rate the ego transform is a pure translation of v_ego * dt."""
        ego = EgoState(v_ego=(10.0, 0.0, 0.0), dt=0.1)
        rotation, translation = ego.ego_transform()
        np.testing.assert_allclose(rotation, np.eye(3))
        np.testing.assert_allclose(translation, [1.0, 0.0, 0.0])

    def test_apply_ego_transform(self):
        """Points are shifted by the ego displacement."""
        ego = EgoState(v_ego=(10.0, 0.0, 0.0), dt=0.1)
        moved = ego.apply_ego_transform(np.array([[5.0, 2.0, 0.0], [0.0, 0.0, 1.0]]))
        np.testing.assert_allclose(moved, [[6.0, 2.0, 0.0], [1.0, 0.0, 1.0]])

    def test_no_sensors_gives_empty_stacks(self):
        """An ego state with no sensors stacks to empty arrays."""
        ego = EgoState(v_ego=(0.0, 0.0, 0.0), dt=0.1)
        assert ego.rotations().shape == (0, 3, 3)
        assert ego.translations().shape == (0, 3)

    def test_stacks_follow_sensor_order(self):
        """Rotation and translation stacks are indexed by sensor id."""
        ego = EgoState(
            v_ego=(1.0, 0.0, 0.0),
            dt=0.1,
            sensor_extrinsics=[
                SensorExtrinsic.from_yaw(0.0, (2.0, 0.0, 0.5)),
                SensorExtrinsic.from_yaw(180.0, (-2.0, 0.0, 0.5)),
            ],
        )
        assert ego.rotations().shape == (2, 3, 3)
        np.testing.assert_allclose(ego.translations()[1], [-2.0, 0.0, 0.5])

    def test_dt_must_be_positive(self):
        """A zero frame interval is rejected."""
        with pytest.raises(ValidationError):
            EgoState(v_ego=(1.0, 0.0, 0.0), dt=0.0)

    def test_json_round_trip(self):
        """Ego state survives a JSON dump and reload."""
        ego = EgoState(
            v_ego=(10.0, -1.0, 0.0),
            dt=0.1,
            sensor_extrinsics=[SensorExtrinsic.from_yaw(45.0, (1.0, 1.0, 0.5))],
        )
        assert EgoState.model_validate_json(ego.model_dump_json()) == ego


class TestFrames:
    """Array containers."""

    def test_lidar_frame_is_read_only(self):
        """Frame arrays are frozen after construction."""
        frame = LidarFrame(np.zeros((2, 3)), np.array([0.1, 0.2]))
        with pytest.raises(ValueError):
            frame.positions[0, 0] = 1.0

    def test_lidar_frame_length_mismatch(self):
        """Positions and intensities must have one row per point."""
        with pytest.raises(ValueError, match="differ in length"):
            LidarFrame(np.zeros((2, 3)), np.array([0.1]))

    def test_lidar_from_points_and_back(self):
        """Building from point models keeps order and frame index."""
        points = [
            LidarPoint(position=(1.0, 2.0, 3.0), intensity=0.5),
            LidarPoint(position=(4.0, 5.0, 6.0), intensity=0.01),
        ]
        frame = LidarFrame.from_points(points, frame_index=3)
        assert len(frame) == 2
        assert frame.point(1).position == (4.0, 5.0, 6.0)
        assert frame.point(1).frame_index == 3

    def test_lidar_subset(self):
        """Subsets keep the selected rows in order."""
        frame = LidarFrame(np.arange(9.0).reshape(3, 3), np.array([0.1, 0.2, 0.3]))
        subset = frame.subset(np.array([0, 2]))
        np.testing.assert_allclose(subset.intensity, [0.1, 0.3])

    def test_radar_empty(self):
        """An empty radar frame has well-shaped arrays."""
        radar = RadarFrame.empty(frame_index=4)
        assert len(radar) == 0
        assert radar.positions.shape == (0, 3)
        assert RadarFrame.from_points([]).sensor_id.dtype == np.int64

    def test_radar_length_mismatch(self):
        """Radar columns must agree in length."""
        with pytest.raises(ValueError):
            RadarFrame(np.zeros((2, 3)), np.zeros(2), np.zeros(1, dtype=np.int64))

    def test_radar_point_accessor(self):
        """Indexing a radar frame yields a validated point model."""
        radar = RadarFrame(np.array([[10.0, 0.0, 0.5]]), np.array([-3.0]), np.array([0]))
        point = radar.point(0)
        assert point.v_meas == -3.0
        assert point.sensor_id == 0

    def test_ground_truth_length_mismatch(self):
        """Ground-truth flow and classes must agree in length."""
        with pytest.raises(ValueError):
            GroundTruth(np.zeros((3, 3)), np.zeros(2))


class TestClusters:
    """Cluster model invariants."""

    def test_radar_cluster_velocity(self):
        """The solved velocity is exposed as an array."""
        cluster = RadarCluster(cluster_id=0, member_indices=[1, 2], v_full=(1.0, 2.0, 3.0))
        np.testing.assert_allclose(cluster.velocity, [1.0, 2.0, 3.0])

    def test_cluster_rejects_duplicates(self):
        """A member index may appear only once."""
        with pytest.raises(ValidationError, match="duplicates"):
            RadarCluster(cluster_id=0, member_indices=[1, 1])

    def test_cluster_rejects_empty(self):
        """A cluster needs at least one member."""
        with pytest.raises(ValidationError):
            LidarCluster(cluster_id=0, member_indices=[])

    def test_static_cluster_cannot_carry_velocity(self):
        """Only dynamic clusters may hold an assigned velocity."""
        with pytest.raises(ValidationError, match="static"):
            LidarCluster(cluster_id=0, member_indices=[0], assigned_velocity=(1.0, 0.0, 0.0))

    def test_dynamic_cluster_with_velocity(self):
        """A dynamic cluster accepts its assigned velocity."""
        cluster = LidarCluster(
            cluster_id=0, member_indices=[0, 1], dynamic=True, assigned_velocity=(15.0, 0.0, 0.0)
        )
        assert cluster.dynamic


class TestFlowField:
    """Dense flow container."""

    def test_zeros(self):
        """A zero flow field is static, invalid and unclustered."""
        flow = FlowField.zeros(4)
        assert len(flow) == 4
        assert not flow.dynamic.any()
        assert not flow.valid.any()
        assert (flow.cluster_id == -1).all()

    def test_column_length_mismatch(self):
        """Flow columns must agree in length."""
        with pytest.raises(ValueError, match="differ in length"):
            FlowField(np.zeros((2, 3)), np.zeros(2), np.zeros(3), np.zeros(2))


class TestMisc:
    """Class codes, timings and manifests."""

    def test_class_codes(self):
        """Class names and codes are fixed."""
        assert CLASS_NAMES == ("BS", "FS", "FD")
        assert CLASS_CODES == {"BS": 0, "FS": 1, "FD": 2}

    def test_frame_timings_total(self):
        """The total is the sum of the stage timings."""
        timings = FrameTimings(stages={"a": 1.5, "b": 2.5})
        assert timings.total_ms == 4.0

    def test_manifest_defaults(self):
        """A manifest without a seed still records its creation time."""
        manifest = RunManifest(input_path="in", config={}, version="0.1.0")
        assert manifest.seed is None
        assert manifest.created_at
