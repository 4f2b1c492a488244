"""Debug dumps for inspecting one frame pair by eye."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..models import RadarCluster

# Static/unclustered points are grey; clusters cycle through this palette
_PALETTE = np.array(
    [
        [228, 26, 28],
        [55, 126, 184],
        [77, 175, 74],
        [152, 78, 163],
        [255, 127, 0],
        [166, 86, 40],
        [247, 129, 191],
        [255, 255, 51],
    ],
    dtype=np.int64,
)
_GREY = np.array([128, 128, 128], dtype=np.int64)


def dump_radar_clusters(clusters: list[RadarCluster], path: str | Path) -> Path:
    """Write solved radar clusters as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [
        {
            "cluster_id": c.cluster_id,
            "member_indices": c.member_indices,
            "v_full": list(c.v_full),
            "solve_residual": c.solve_residual,
            "rank_deficient": c.rank_deficient,
        }
        for c in clusters
    ]
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def dump_cluster_points(
    positions: np.ndarray,
    cluster_id: np.ndarray,
    dynamic: np.ndarray,
    path: str | Path,
) -> Path:
    """Write an ASCII PLY with one colour per LiDAR cluster.

    Extra vertex properties ``cluster`` and ``dynamic`` carry the labels.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    cluster_id = np.asarray(cluster_id, dtype=np.int64)
    colours = np.where(
        (cluster_id >= 0)[:, None], _PALETTE[np.maximum(cluster_id, 0) % len(_PALETTE)], _GREY
    )

    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(positions)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "property int cluster",
        "property uchar dynamic",
        "end_header",
    ]
    body = [
        f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b} {c} {int(d)}"
        for (x, y, z), (r, g, b), c, d in zip(
            positions, colours, cluster_id, np.asarray(dynamic, dtype=bool), strict=True
        )
    ]
    path.write_text("\n".join(header + body) + "\n", encoding="utf-8")
    return path
