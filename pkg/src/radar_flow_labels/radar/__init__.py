"""Radar side: Doppler compensation, dynamic gating, CCL clustering, velocity solve."""

from .ccl import ccl_cluster
from .doppler import (
    CompensatedRadarFrame,
    CompensatedRadarPoint,
    classify_dynamic,
    compensate_doppler,
    compensate_frame,
)
from .motion import RadarMotion, estimate_radar_motion
from .solver import VelocitySolution, solve_bounded_velocity, solve_cluster_velocity

__all__ = [
    "CompensatedRadarFrame",
    "CompensatedRadarPoint",
    "RadarMotion",
    "VelocitySolution",
    "ccl_cluster",
    "classify_dynamic",
    "compensate_doppler",
    "compensate_frame",
    "estimate_radar_motion",
    "solve_bounded_velocity",
    "solve_cluster_velocity",
]
