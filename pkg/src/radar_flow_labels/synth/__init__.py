"""Synthetic scene oracle: rigid boxes, LiDAR, Doppler radar and exact ground truth."""

from .presets import PRESETS, get_preset, preset_scenes
from .scene import (
    NoiseSpec,
    RadarSpec,
    RigidBody,
    SceneSpec,
    box_distance,
    box_on_road,
    generate_frame_pair,
    generate_sequence,
    load_scene_file,
)

__all__ = [
    "PRESETS",
    "NoiseSpec",
    "RadarSpec",
    "RigidBody",
    "SceneSpec",
    "box_distance",
    "box_on_road",
    "generate_frame_pair",
    "generate_sequence",
    "get_preset",
    "load_scene_file",
    "preset_scenes",
]
