"""Scene-flow evaluation: range-wise dynamic EPE, dynamic IoU and three-way EPE.

All metrics compare NON-EGO flow (prediction delta vs ground-truth flow) over
points inside a square grid centred on the ego vehicle. A point is dynamic when
its non-ego flow magnitude exceeds ``dynamic_flow_threshold``. Range is the 3D
distance of the point from the ego origin. Empty bins and missing classes are
reported as ``None`` rather than zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field
from rich.table import Table

from .config import PipelineConfig
from .exceptions import FrameValidationError
from .models import CLASS_CODES, CLASS_NAMES

logger = logging.getLogger(__name__)

DEFAULT_BIN_EDGES: tuple[float, ...] = (0.0, 35.0, math.inf)
DYNAMIC_THRESHOLD = 0.05


def parse_bin_edges(text: str) -> tuple[float, ...]:
    """Parse ``"0,35"`` into ``(0.0, 35.0, inf)``.

    Edges must be non-negative and strictly increasing. The bins always cover
    every range: 0 is prepended when missing and the open last bin is appended.
    """
    try:
        edges = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ValueError(f"bin edges must be comma-separated numbers, got {text!r}") from e
    edges = [e for e in edges if not math.isinf(e)]
    if not edges:
        raise ValueError("at least one bin edge is required")
    if edges[0] < 0 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"bin edges must be non-negative and increasing, got {text!r}")
    return cover_all_ranges(tuple(edges))


def cover_all_ranges(edges: tuple[float, ...]) -> tuple[float, ...]:
    """``(10, 35)`` -> ``(0, 10, 35, inf)`` so every range falls in exactly one bin."""
    edges = tuple(float(e) for e in edges)
    if not edges or edges[0] > 0.0:
        edges = (0.0, *edges)
    if not math.isinf(edges[-1]):
        edges = (*edges, math.inf)
    return edges


def bin_labels(edges: tuple[float, ...]) -> list[str]:
    """``(0, 35, inf)`` -> ``["0-35", "35+"]``."""
    labels = []
    for lo, hi in zip(edges, edges[1:]):
        labels.append(f"{lo:g}+" if math.isinf(hi) else f"{lo:g}-{hi:g}")
    return labels


def _check_aligned(*arrays: np.ndarray) -> None:
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        raise FrameValidationError(f"metric inputs differ in length: {sorted(lengths)}")


def grid_mask(points: np.ndarray, half_extent: float) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    return (np.abs(points[:, 0]) <= half_extent) & (np.abs(points[:, 1]) <= half_extent)


def crop_to_grid(
    points: np.ndarray, pred: np.ndarray, gt: np.ndarray, half_extent: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep the points with |x| <= half_extent and |y| <= half_extent."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    _check_aligned(points, pred, gt)
    keep = grid_mask(points, half_extent)
    return points[keep], pred[keep], gt[keep]


def _bin_index(points: np.ndarray, edges: tuple[float, ...]) -> np.ndarray:
    """Bin of each point by range; -1 when below the first edge."""
    ranges = np.linalg.norm(points, axis=1)
    index = np.searchsorted(np.asarray(edges), ranges, side="right") - 1
    return np.where(index >= len(edges) - 1, -1, index)


def _epe(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return np.linalg.norm(pred - gt, axis=1)


def range_wise_dynamic_epe(
    points: np.ndarray,
    pred: np.ndarray,
    gt: np.ndarray,
    bin_edges: tuple[float, ...] = DEFAULT_BIN_EDGES,
    threshold: float = DYNAMIC_THRESHOLD,
) -> list[float | None]:
    """Mean end-point error over ground-truth dynamic points, per range bin."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    _check_aligned(points, pred, gt)

    bins = _bin_index(points, bin_edges)
    dynamic = np.linalg.norm(gt, axis=1) > threshold
    errors = _epe(pred, gt)
    result: list[float | None] = []
    for k in range(len(bin_edges) - 1):
        selected = (bins == k) & dynamic
        result.append(float(np.mean(errors[selected])) if selected.any() else None)
    return result


def _iou(pred_dynamic: np.ndarray, gt_dynamic: np.ndarray) -> float | None:
    tp = int(np.sum(pred_dynamic & gt_dynamic))
    fp = int(np.sum(pred_dynamic & ~gt_dynamic))
    fn = int(np.sum(~pred_dynamic & gt_dynamic))
    union = tp + fp + fn
    return tp / union if union else None


def range_wise_dynamic_iou(
    points: np.ndarray,
    pred: np.ndarray,
    gt: np.ndarray,
    bin_edges: tuple[float, ...] = DEFAULT_BIN_EDGES,
    threshold: float = DYNAMIC_THRESHOLD,
) -> list[float | None]:
    """Jaccard index of predicted vs ground-truth dynamic masks, per range bin."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    _check_aligned(points, pred, gt)

    bins = _bin_index(points, bin_edges)
    pred_dynamic = np.linalg.norm(pred, axis=1) > threshold
    gt_dynamic = np.linalg.norm(gt, axis=1) > threshold
    return [
        _iou(pred_dynamic[bins == k], gt_dynamic[bins == k]) for k in range(len(bin_edges) - 1)
    ]


def three_way_epe(
    pred: np.ndarray, gt: np.ndarray, classes: np.ndarray
) -> dict[str, float | None]:
    """Mean EPE per class (FD, FS, BS) and their unweighted mean.

    A class with no points is ``None``; the mean then covers the present classes.
    """
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 3)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 3)
    classes = np.asarray(classes).reshape(-1)
    _check_aligned(pred, gt, classes)

    errors = _epe(pred, gt)
    result: dict[str, float | None] = {}
    for name in ("FD", "FS", "BS"):
        selected = classes == CLASS_CODES[name]
        result[name] = float(np.mean(errors[selected])) if selected.any() else None

    present = [v for v in result.values() if v is not None]
    missing = [name for name, v in result.items() if v is None]
    if missing:
        logger.warning("three-way EPE: no points of class %s", ", ".join(missing))
    result["mean"] = sum(present) / len(present) if present else None
    return result


@dataclass(frozen=True)
class EvalInput:
    """One evaluated frame: positions, predicted and GT non-ego flow, GT classes."""

    frame_id: str
    points: np.ndarray
    pred: np.ndarray
    gt: np.ndarray
    classes: np.ndarray


class FrameEvalRow(BaseModel):
    frame_id: str
    n_points: int
    dynamic_epe: float | None
    dynamic_iou: float | None


class EvalReport(BaseModel):
    """Evaluation summary; ``range_bin_edges`` omits the implicit open last edge."""

    range_bin_edges: list[float]
    bin_labels: list[str]
    dynamic_epe: list[float | None]
    dynamic_iou: list[float | None]
    bin_counts: list[int]
    bin_dynamic_counts: list[int]
    three_way: dict[str, float | None]
    class_counts: dict[str, int]
    n_points: int
    n_in_grid: int
    frames: list[FrameEvalRow] = Field(default_factory=list)


def evaluate(
    inputs: EvalInput | list[EvalInput],
    config: PipelineConfig | None = None,
    bin_edges: tuple[float, ...] = DEFAULT_BIN_EDGES,
) -> EvalReport:
    """Crop every frame to the grid, pool the points and compute all metrics."""
    config = config or PipelineConfig()
    bin_edges = cover_all_ranges(bin_edges)
    if isinstance(inputs, EvalInput):
        inputs = [inputs]
    threshold = config.dynamic_flow_threshold

    pooled: list[tuple[np.ndarray, ...]] = []
    rows: list[FrameEvalRow] = []
    n_points = 0
    for item in inputs:
        points = np.asarray(item.points, dtype=np.float64).reshape(-1, 3)
        pred = np.asarray(item.pred, dtype=np.float64).reshape(-1, 3)
        gt = np.asarray(item.gt, dtype=np.float64).reshape(-1, 3)
        classes = np.asarray(item.classes).reshape(-1)
        try:
            _check_aligned(points, pred, gt, classes)
        except FrameValidationError as e:
            raise FrameValidationError(f"frame {item.frame_id}: {e}") from e
        n_points += len(points)

        keep = grid_mask(points, config.grid_half_extent)
        points, pred, gt, classes = points[keep], pred[keep], gt[keep], classes[keep]
        pooled.append((points, pred, gt, classes))
        whole = (0.0, math.inf)
        rows.append(
            FrameEvalRow(
                frame_id=item.frame_id,
                n_points=len(points),
                dynamic_epe=range_wise_dynamic_epe(points, pred, gt, whole, threshold)[0],
                dynamic_iou=range_wise_dynamic_iou(points, pred, gt, whole, threshold)[0],
            )
        )

    if pooled:
        points, pred, gt, classes = (np.concatenate(col) for col in zip(*pooled))
    else:
        points, pred, gt = (np.zeros((0, 3)) for _ in range(3))
        classes = np.zeros(0, dtype=np.int8)

    bins = _bin_index(points, bin_edges)
    gt_dynamic = np.linalg.norm(gt, axis=1) > threshold
    n_bins = len(bin_edges) - 1
    return EvalReport(
        range_bin_edges=[e for e in bin_edges if not math.isinf(e)],
        bin_labels=bin_labels(bin_edges),
        dynamic_epe=range_wise_dynamic_epe(points, pred, gt, bin_edges, threshold),
        dynamic_iou=range_wise_dynamic_iou(points, pred, gt, bin_edges, threshold),
        bin_counts=[int(np.sum(bins == k)) for k in range(n_bins)],
        bin_dynamic_counts=[int(np.sum((bins == k) & gt_dynamic)) for k in range(n_bins)],
        three_way=three_way_epe(pred, gt, classes),
        class_counts={name: int(np.sum(classes == code)) for code, name in enumerate(CLASS_NAMES)},
        n_points=n_points,
        n_in_grid=len(points),
        frames=rows,
    )


def check_acceptance(
    report: EvalReport,
    max_dynamic_epe: float | None = None,
    min_dynamic_iou: float | None = None,
    max_three_way_mean: float | None = None,
) -> list[str]:
    """Human-readable list of violated thresholds (empty when all pass)."""
    violations = []
    for label, epe, iou in zip(report.bin_labels, report.dynamic_epe, report.dynamic_iou):
        if max_dynamic_epe is not None and epe is not None and epe > max_dynamic_epe:
            violations.append(f"dynamic EPE {epe:.4f} m in bin {label} > {max_dynamic_epe}")
        if min_dynamic_iou is not None and iou is not None and iou < min_dynamic_iou:
            violations.append(f"dynamic IoU {iou:.4f} in bin {label} < {min_dynamic_iou}")
    mean = report.three_way.get("mean")
    if max_three_way_mean is not None and mean is not None and mean > max_three_way_mean:
        violations.append(f"three-way mean EPE {mean:.4f} m > {max_three_way_mean}")
    return violations


def _fmt(value: float | None, digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def render_report_table(report: EvalReport) -> list[Table]:
    """Rich tables: range-wise metrics, then three-way EPE."""
    ranges = Table(title="Range-wise dynamic metrics")
    ranges.add_column("Range (m)", style="cyan")
    ranges.add_column("Points", justify="right")
    ranges.add_column("Dynamic", justify="right")
    ranges.add_column("Dynamic EPE (m)", justify="right", style="green")
    ranges.add_column("Dynamic IoU", justify="right", style="magenta")
    for label, count, dyn, epe, iou in zip(
        report.bin_labels,
        report.bin_counts,
        report.bin_dynamic_counts,
        report.dynamic_epe,
        report.dynamic_iou,
    ):
        ranges.add_row(label, str(count), str(dyn), _fmt(epe), _fmt(iou))

    three_way = Table(title="Three-way EPE (m)")
    for name in ("FD", "FS", "BS", "mean"):
        three_way.add_column(name, justify="right", style="bold" if name == "mean" else None)
    three_way.add_row(*(_fmt(report.three_way.get(name)) for name in ("FD", "FS", "BS", "mean")))
    return [ranges, three_way]
