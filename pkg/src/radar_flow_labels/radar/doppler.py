"""Ego-motion compensation of radar Doppler and dynamic-point classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import FrameValidationError
from ..models import EgoState, RadarFrame, RadarPoint


@dataclass(frozen=True)
class CompensatedRadarPoint:
    """A radar point with its line of sight and ego-compensated radial velocity.

    ``u`` is the unit line of sight in the sensor frame. ``v_comp_vec`` is
    ``v_comp * u`` rotated back into the ego frame.
    """

    base: RadarPoint
    u: np.ndarray
    v_comp: float
    v_comp_vec: np.ndarray


@dataclass(frozen=True)
class CompensatedRadarFrame:
    """Vectorized compensation result for a whole radar frame.

    ``rows`` holds u^T R(S<-ego) per point, i.e. one row of the per-cluster
    velocity system; it equals the ego-frame line of sight.
    """

    radar: RadarFrame
    u: np.ndarray
    v_comp: np.ndarray
    v_comp_vec: np.ndarray
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.v_comp)

    def point(self, index: int) -> CompensatedRadarPoint:
        return CompensatedRadarPoint(
            base=self.radar.point(index),
            u=self.u[index].copy(),
            v_comp=float(self.v_comp[index]),
            v_comp_vec=self.v_comp_vec[index].copy(),
        )


def compensate_frame(
    radar: RadarFrame, ego: EgoState, min_sensor_range: float = 1e-6
) -> CompensatedRadarFrame:
    """Compensate every point: v_comp = v_meas + u^T R(S<-ego) v_ego."""
    if len(radar) == 0:
        empty = np.zeros((0, 3))
        return CompensatedRadarFrame(radar, empty, np.zeros(0), empty, empty)

    rotations = ego.rotations()[radar.sensor_id]
    origins = ego.translations()[radar.sensor_id]
    sensor_positions = np.einsum("nij,nj->ni", rotations, radar.positions - origins)
    ranges = np.linalg.norm(sensor_positions, axis=1)
    if np.any(ranges < min_sensor_range):
        bad = np.flatnonzero(ranges < min_sensor_range).tolist()
        raise FrameValidationError(f"radar point(s) {bad} sit on their sensor origin")

    u = sensor_positions / ranges[:, None]
    rows = np.einsum("ni,nij->nj", u, rotations)
    ego_in_sensor = np.einsum("nij,j->ni", rotations, ego.velocity)
    v_comp = radar.v_meas + np.einsum("ni,ni->n", u, ego_in_sensor)
    v_comp_vec = v_comp[:, None] * rows
    return CompensatedRadarFrame(radar, u, v_comp, v_comp_vec, rows)


def compensate_doppler(
    point: RadarPoint, ego: EgoState, min_sensor_range: float = 1e-6
) -> CompensatedRadarPoint:
    """Compensate a single radar point for ego motion."""
    if point.sensor_id >= len(ego.sensor_extrinsics):
        raise FrameValidationError(f"unknown sensor_id {point.sensor_id}")
    frame = RadarFrame.from_points([point], frame_index=point.frame_index)
    return compensate_frame(frame, ego, min_sensor_range).point(0)


def classify_dynamic(
    points: CompensatedRadarFrame | list[CompensatedRadarPoint] | np.ndarray,
    delta_dyn: float,
) -> np.ndarray:
    """Indices whose |v_comp| is strictly greater than ``delta_dyn``.

    Accepts a compensated frame, a list of compensated points, or raw v_comp values.
    """
    if isinstance(points, CompensatedRadarFrame):
        v_comp = points.v_comp
    elif isinstance(points, list):
        v_comp = np.array([p.v_comp for p in points], dtype=np.float64)
    else:
        v_comp = np.asarray(points, dtype=np.float64)
    return np.flatnonzero(np.abs(v_comp) > delta_dyn)
