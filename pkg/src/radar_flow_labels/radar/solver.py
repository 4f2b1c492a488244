"""Bounded least-squares recovery of a cluster's full 3D velocity.

Each radar point j in a rigid cluster gives one linear constraint
``(u_j^T R_j) v = v_comp_j``. The stacked system can be over- or
under-determined; it is solved over the box ``|v_i| <= v_bound``.

Rank deficiency (singular values below ``rank_tol`` times the largest) is a
supported regime: the minimum-norm minimizer within the box is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear, minimize

from ..models import EgoState
from .doppler import CompensatedRadarPoint


@dataclass(frozen=True)
class VelocitySolution:
    """Solved full velocity with its RMS residual and rank flag."""

    v_full: np.ndarray
    residual: float
    rank_deficient: bool
    rank: int


def _in_box(v: np.ndarray, bound: float) -> bool:
    return bool(np.all(np.abs(v) <= bound))


def _rms(a: np.ndarray, b: np.ndarray, v: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a @ v - b) ** 2)))


def solve_bounded_velocity(
    a: np.ndarray, b: np.ndarray, v_bound: float, rank_tol: float = 1e-8
) -> VelocitySolution:
    """Solve min ||A v - b|| subject to -v_bound <= v_i <= v_bound."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if len(a) == 0:
        raise ValueError("cannot solve an empty cluster")

    singular = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(singular > rank_tol * singular[0])) if singular[0] > 0 else 0
    rank_deficient = rank < 3

    # Minimum-norm unconstrained solution; exact for the interior case
    v, *_ = np.linalg.lstsq(a, b, rcond=rank_tol)
    if _in_box(v, v_bound):
        return VelocitySolution(v, _rms(a, b, v), rank_deficient, rank)

    bounded = lsq_linear(a, b, bounds=(-v_bound, v_bound), method="bvls", tol=1e-12).x
    bounded = np.clip(bounded, -v_bound, v_bound)
    if rank_deficient:
        bounded = _minimum_norm_in_box(a, bounded, v_bound, rank, rank_tol)
    return VelocitySolution(bounded, _rms(a, b, bounded), rank_deficient, rank)


def _minimum_norm_in_box(
    a: np.ndarray, v_opt: np.ndarray, v_bound: float, rank: int, rank_tol: float
) -> np.ndarray:
    """Smallest-norm point of the box that shares ``A v_opt``.

    All minimizers of a convex least-squares problem produce the same A v, so
    the bounded minimizers are the box intersected with v_opt + null(A).
    """
    _, _, vt = np.linalg.svd(a)
    row_space = vt[:rank]
    target = row_space @ v_opt
    if rank == 0:
        return np.zeros(3)

    result = minimize(
        lambda v: float(v @ v),
        v_opt,
        jac=lambda v: 2.0 * v,
        method="SLSQP",
        bounds=[(-v_bound, v_bound)] * 3,
        constraints=[{
            "type": "eq",
            "fun": lambda v: row_space @ v - target,
            "jac": lambda v: row_space,
        }],
        options={"ftol": 1e-15, "maxiter": 200},
    )
    candidate = np.clip(result.x, -v_bound, v_bound)
    if np.max(np.abs(row_space @ candidate - target)) > max(rank_tol, 1e-9) * max(1.0, v_bound):
        return v_opt
    return candidate


def solve_cluster_velocity(
    points: list[CompensatedRadarPoint],
    ego: EgoState,
    v_bound: float,
    rank_tol: float = 1e-8,
) -> VelocitySolution:
    """Solve one cluster from its compensated points.

    Row j of the system is u_j^T R(S_j<-ego) for the sensor that saw point j;
    the right-hand side is v_comp_j.
    """
    if not points:
        raise ValueError("cannot solve an empty cluster")
    rotations = ego.rotations()
    rows = np.stack([p.u @ rotations[p.base.sensor_id] for p in points])
    b = np.array([p.v_comp for p in points], dtype=np.float64)
    return solve_bounded_velocity(rows, b, v_bound, rank_tol)
