"""LiDAR side: ground removal, intensity split, density clustering."""

from .clustering import (
    DensityClustering,
    density_cluster,
    density_labels,
    reattach_low_intensity,
)
from .ground import remove_ground, split_by_intensity
from .prep import PreparedLidarFrame, cluster_prepared, preprocess_lidar

__all__ = [
    "DensityClustering",
    "PreparedLidarFrame",
    "cluster_prepared",
    "density_cluster",
    "density_labels",
    "preprocess_lidar",
    "reattach_low_intensity",
    "remove_ground",
    "split_by_intensity",
]
