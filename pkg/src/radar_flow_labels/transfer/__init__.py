"""Label transfer: radar association, Chamfer arbitration, flow propagation."""

from .association import Association, associate, range_adaptive_threshold
from .chamfer import ChamferTarget, chamfer_distance
from .propagation import (
    Resolution,
    align_next_frame,
    assemble_total_flow,
    candidate_velocities,
    clustering_input,
    propagate_labels,
    resolve_velocity_ambiguity,
    vote_cluster_dynamic,
)

__all__ = [
    "Association",
    "ChamferTarget",
    "Resolution",
    "align_next_frame",
    "assemble_total_flow",
    "associate",
    "candidate_velocities",
    "chamfer_distance",
    "clustering_input",
    "propagate_labels",
    "range_adaptive_threshold",
    "resolve_velocity_ambiguity",
    "vote_cluster_dynamic",
]
