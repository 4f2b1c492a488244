"""Frame-pair orchestration: radar motion -> LiDAR prep -> label transfer.

``estimate_flow`` runs one pair in memory. ``run_batch`` labels a whole
sequence directory with a bounded worker pool; every pair is independent, and
results are gathered in frame order so the output does not depend on the
number of workers.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .exceptions import FrameValidationError
from .formats import (
    FlowWriter,
    dump_cluster_points,
    dump_radar_clusters,
    list_frame_dirs,
    read_frame,
    write_manifest,
)
from .lidar import PreparedLidarFrame, cluster_prepared, preprocess_lidar, remove_ground
from .models import FlowField, Frame, FrameTimings, LidarCluster, RunManifest
from .radar import RadarMotion, estimate_radar_motion
from .transfer import (
    Association,
    align_next_frame,
    assemble_total_flow,
    associate,
    clustering_input,
    propagate_labels,
)
from .validation import validate_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowResult:
    """Everything one frame pair produced.

    ``flow`` has one row per point of the input LiDAR frame. The intermediate
    results (``prepared``, ``association``, ``clusters``) index the validated
    frame, whose rows are ``kept`` of the input.
    """

    frame_id: str
    flow: FlowField
    motion: RadarMotion
    prepared: PreparedLidarFrame
    association: Association
    clusters: list[LidarCluster]
    kept: np.ndarray
    timings: FrameTimings


@contextmanager
def _stage(timings: FrameTimings, name: str) -> Iterator[None]:
    start = time.perf_counter()
    yield
    timings.stages[name] = (time.perf_counter() - start) * 1000.0


def _scatter(local: FlowField, kept: np.ndarray, n: int) -> FlowField:
    if len(kept) == n:
        return local
    delta = np.zeros((n, 3))
    dynamic = np.zeros(n, dtype=bool)
    valid = np.zeros(n, dtype=bool)
    cluster_id = np.full(n, -1, dtype=np.int64)
    delta[kept] = local.delta
    dynamic[kept] = local.dynamic
    valid[kept] = local.valid
    cluster_id[kept] = local.cluster_id
    return FlowField(delta=delta, dynamic=dynamic, valid=valid, cluster_id=cluster_id)


def estimate_flow(frame_t: Frame, frame_t1: Frame, config: PipelineConfig) -> FlowResult:
    """Dense non-ego flow for ``frame_t`` using radar at t and LiDAR at t+1."""
    timings = FrameTimings()

    with _stage(timings, "validate"):
        current = validate_frame(
            frame_t.lidar, frame_t.radar, frame_t.ego, config.min_sensor_range
        )
        following = validate_frame(
            frame_t1.lidar, frame_t1.radar, frame_t1.ego, config.min_sensor_range
        )
    ego = current.ego

    with _stage(timings, "radar_motion"):
        motion = estimate_radar_motion(current.radar, ego, config)

    with _stage(timings, "lidar_prep"):
        prepared = preprocess_lidar(current.lidar, config)

    with _stage(timings, "association"):
        association = associate(
            current.lidar.positions,
            current.radar.positions,
            motion.dynamic_mask,
            config,
            query_indices=prepared.kept_indices,
        )

    with _stage(timings, "clustering"):
        prepared = cluster_prepared(prepared, clustering_input(prepared, association), config)

    with _stage(timings, "next_frame"):
        next_kept, _ = remove_ground(
            following.lidar.positions, config.ground_cell_size, config.ground_height_tol
        )
        next_points = align_next_frame(following.lidar.positions[next_kept], ego)

    with _stage(timings, "propagation"):
        local, clusters = propagate_labels(
            prepared, motion, association, next_points, config, ego.dt
        )

    kept = np.flatnonzero(current.lidar_kept)
    flow = _scatter(local, kept, len(frame_t.lidar))
    logger.info(
        "frame %s: %d/%d LiDAR points dynamic, %d radar cluster(s), %.1f ms",
        frame_t.frame_id, int(flow.dynamic.sum()), len(flow), len(motion.clusters),
        timings.total_ms,
    )
    return FlowResult(
        frame_id=frame_t.frame_id,
        flow=flow,
        motion=motion,
        prepared=prepared,
        association=association,
        clusters=clusters,
        kept=kept,
        timings=timings,
    )


def total_flow(result: FlowResult, frame: Frame) -> np.ndarray:
    """Ego plus non-ego displacement for every input point of ``frame``."""
    return assemble_total_flow(result.flow, frame.ego, frame.lidar.positions)


@dataclass
class OutputOptions:
    """Which files to write next to each flow CSV."""

    binary: bool = False
    total: bool = False
    debug_dump: bool = False


@dataclass
class PairOutput:
    """Files written for one pair plus its timings."""

    frame_id: str
    paths: list[Path] = field(default_factory=list)
    timings: FrameTimings = field(default_factory=FrameTimings)
    n_dynamic: int = 0
    n_points: int = 0


def write_outputs(
    result: FlowResult,
    frame_t: Frame,
    output_dir: str | Path,
    options: OutputOptions | None = None,
) -> PairOutput:
    """Write the flow file (and optional extras) for one processed pair."""
    options = options or OutputOptions()
    writer = FlowWriter(output_dir)
    paths = writer.write(result.flow, result.frame_id, binary=options.binary)
    if options.total:
        paths.append(writer.write_total(total_flow(result, frame_t), result.frame_id))
    if options.debug_dump:
        # Flat next to the flow files so the directory manifest lists them
        prefix = writer.output_dir / f"debug.{result.frame_id}"
        paths.append(
            dump_radar_clusters(
                result.motion.clusters, prefix.with_name(f"{prefix.name}.radar_clusters.json")
            )
        )
        paths.append(
            dump_cluster_points(
                frame_t.lidar.positions[result.kept],
                result.flow.cluster_id[result.kept],
                result.flow.dynamic[result.kept],
                prefix.with_name(f"{prefix.name}.clusters.ply"),
            )
        )
    return PairOutput(
        frame_id=result.frame_id,
        paths=paths,
        timings=result.timings,
        n_dynamic=int(result.flow.dynamic.sum()),
        n_points=len(result.flow),
    )


def consecutive_pairs(indices: list[int]) -> list[tuple[int, int]]:
    """Positions (a, a+1) in ``indices`` whose frame numbers are consecutive."""
    pairs = []
    for a in range(len(indices) - 1):
        if indices[a + 1] == indices[a] + 1:
            pairs.append((a, a + 1))
        else:
            logger.warning(
                "gap in frame numbering: %06d -> %06d, pair skipped",
                indices[a], indices[a + 1],
            )
    return pairs


def run_batch(
    sequence_dir: str | Path,
    config: PipelineConfig,
    output_dir: str | Path,
    threads: int = 1,
    options: OutputOptions | None = None,
    seed: int | None = None,
    command: str = "batch",
) -> list[PairOutput]:
    """Label every consecutive frame pair of a sequence directory.

    Writes one flow file per pair and a single manifest into ``output_dir``.

    Raises:
        FrameValidationError: fewer than two frames in the sequence.
    """
    frames = list_frame_dirs(sequence_dir)
    if len(frames) < 2:
        raise FrameValidationError(
            f"{sequence_dir}: need at least two frames, found {len(frames)}"
        )
    indices = [index for index, _ in frames]
    pairs = consecutive_pairs(indices)
    output_dir = Path(output_dir)

    def process(pair: tuple[int, int]) -> tuple[FlowResult, Frame]:
        frame_t = read_frame(frames[pair[0]][1])
        frame_t1 = read_frame(frames[pair[1]][1])
        return estimate_flow(frame_t, frame_t1, config), frame_t

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        processed = list(pool.map(process, pairs))

    # Writes stay on the calling thread, in frame order
    outputs = [write_outputs(result, frame_t, output_dir, options) for result, frame_t in processed]

    write_manifest(
        RunManifest(
            input_path=str(sequence_dir),
            config=config.model_dump(),
            version=__version__,
            seed=seed,
            command=command,
            frame_timings_ms={o.frame_id: round(o.timings.total_ms, 3) for o in outputs},
            outputs=[p.name for o in outputs for p in o.paths],
        ),
        output_dir,
    )
    return outputs
