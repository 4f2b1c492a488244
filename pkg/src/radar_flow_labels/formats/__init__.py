"""On-disk formats: frame directories, flow files, debug dumps and manifests."""

from .debug import dump_cluster_points, dump_radar_clusters
from .flow import FlowWriter, flow_frame_id, read_flow
from .frames import (
    frame_dir_name,
    list_frame_dirs,
    read_frame,
    read_frame_binary,
    read_frame_dir,
    write_frame_binary,
    write_frame_dir,
)
from .manifest import MANIFEST_NAME, read_manifest, write_manifest

__all__ = [
    "MANIFEST_NAME",
    "FlowWriter",
    "dump_cluster_points",
    "dump_radar_clusters",
    "flow_frame_id",
    "frame_dir_name",
    "list_frame_dirs",
    "read_flow",
    "read_frame",
    "read_frame_binary",
    "read_frame_dir",
    "read_manifest",
    "write_frame_binary",
    "write_frame_dir",
    "write_manifest",
]
