"""End-to-end tests for frame-pair labelling and batch runs (pipeline.py)."""

import dataclasses
import logging

import numpy as np
import pytest

from radar_flow_labels.config import PipelineConfig
from radar_flow_labels.exceptions import FrameValidationError
from radar_flow_labels.formats import read_flow, read_manifest, write_frame_dir
from radar_flow_labels.metrics import EvalInput, evaluate
from radar_flow_labels.models import CLASS_CODES, LidarFrame
from radar_flow_labels.pipeline import (
    OutputOptions,
    consecutive_pairs,
    estimate_flow,
    run_batch,
    total_flow,
)
from radar_flow_labels.radar import compensate_frame
from radar_flow_labels.synth import generate_sequence, get_preset

FD = CLASS_CODES["FD"]


def _run_preset(name: str, seed: int = 0):
    frame_t, frame_t1 = generate_sequence(get_preset(name, seed=seed), 2)
    result = estimate_flow(frame_t, frame_t1, PipelineConfig())
    report = evaluate(
        EvalInput(frame_t.frame_id, frame_t.lidar.positions, result.flow.delta,
                  frame_t.gt.flow, frame_t.gt.classes)
    )
    return frame_t, result, report


def _write_sequence(root, name="highway-5-movers", n_frames=5, keep=None):
    frames = generate_sequence(get_preset(name), n_frames)
    for k, frame in enumerate(frames):
        if keep is None or k in keep:
            write_frame_dir(frame, root)
    return frames


class TestPresetOracles:
    """Noise-free presets are labelled exactly; noisy ones nearly so."""

    def test_highway(self):
        """Five noise-free movers are labelled exactly in both bins."""
        _, result, report = _run_preset("highway-5-movers")
        assert all(epe is not None and epe < 1e-6 for epe in report.dynamic_epe)
        assert report.dynamic_iou == [1.0, 1.0]
        assert len(result.flow) == report.n_points

    def test_long_range(self):
        """A lone mover at 150 m is labelled exactly in the far bin."""
        _, _, report = _run_preset("long-range-mover")
        assert report.dynamic_epe[0] is None
        assert report.dynamic_epe[1] < 1e-6
        assert report.dynamic_iou[1] == 1.0

    def test_static_world(self):
        """Pure ego motion compensates to zero and nothing is labelled dynamic."""
        frame_t, result, report = _run_preset("static-world")
        v_comp = compensate_frame(frame_t.radar, frame_t.ego).v_comp
        np.testing.assert_allclose(v_comp, 0.0, atol=1e-9)
        assert len(result.motion.dynamic_indices) == 0
        np.testing.assert_array_equal(result.flow.delta, 0.0)
        assert not result.flow.dynamic.any()
        assert report.three_way["mean"] == 0.0

    def test_blindspot(self):
        """A mover no radar sees stays static while the visible lead car is exact."""
        frame_t, result, _ = _run_preset("blindspot-lateral")
        positions = frame_t.lidar.positions
        movers = frame_t.gt.classes == FD
        alongside = movers & (positions[:, 1] > 6.0)
        lead = movers & (positions[:, 1] < 6.0)
        assert alongside.any() and lead.any()
        assert not result.flow.dynamic[alongside].any()
        assert not result.flow.valid[alongside].any()
        np.testing.assert_array_equal(result.flow.delta[alongside], 0.0)
        assert result.flow.dynamic[lead].all()
        np.testing.assert_allclose(result.flow.delta[lead], frame_t.gt.flow[lead], atol=1e-6)

    def test_snowstorm(self):
        """Clutter is never dynamic and never clustered."""
        frame_t, result, report = _run_preset("snowstorm")
        clutter = frame_t.lidar.intensity < 0.01
        assert clutter.any()
        assert not result.flow.dynamic[clutter].any()
        assert (result.flow.cluster_id[clutter] == -1).all()
        assert all(iou is None or iou >= 0.95 for iou in report.dynamic_iou)

    @pytest.mark.parametrize("seed", range(24))
    def test_ghost_alley(self, seed):
        """Ghost returns between the walls never leak motion onto static points."""
        frame_t, result, _ = _run_preset("ghost-alley", seed)
        movers = frame_t.gt.classes == FD
        assert movers.any()
        assert result.flow.dynamic[movers].all()
        assert not result.flow.dynamic[~movers].any()
        np.testing.assert_allclose(result.flow.delta[movers], frame_t.gt.flow[movers], atol=1e-6)
        np.testing.assert_array_equal(result.flow.delta[~movers], 0.0)


class TestEstimateFlow:
    """Single-pair behaviour."""

    def test_non_finite_points_get_zero_flow(self):
        """A NaN point keeps its row with zero, invalid, unclustered flow."""
        frame_t, frame_t1 = generate_sequence(get_preset("highway-5-movers"), 2)
        lidar = LidarFrame(
            np.vstack([frame_t.lidar.positions, [[np.nan, 0.0, 0.0]]]),
            np.append(frame_t.lidar.intensity, 0.5),
        )
        result = estimate_flow(dataclasses.replace(frame_t, lidar=lidar), frame_t1,
                               PipelineConfig())
        assert len(result.flow) == len(lidar)
        assert len(result.kept) == len(lidar) - 1
        np.testing.assert_array_equal(result.flow.delta[-1], 0.0)
        assert result.flow.cluster_id[-1] == -1
        assert not result.flow.valid[-1]

    def test_timings_recorded(self):
        """Every pipeline stage reports a timing."""
        frame_t, frame_t1 = generate_sequence(get_preset("static-world"), 2)
        result = estimate_flow(frame_t, frame_t1, PipelineConfig())
        assert {"validate", "radar_motion", "lidar_prep", "association", "clustering",
                "next_frame", "propagation"} <= set(result.timings.stages)
        assert result.timings.total_ms >= 0.0

    def test_total_flow(self):
        """Total flow adds the ego step to the non-ego flow."""
        frame_t, result, _ = _run_preset("highway-5-movers")
        total = total_flow(result, frame_t)
        ego_step = np.asarray(frame_t.ego.v_ego) * frame_t.ego.dt
        np.testing.assert_allclose(total, result.flow.delta + ego_step, atol=1e-9)

    def test_repeat_runs_are_bit_identical(self):
        """Two runs over the same pair agree bit for bit."""
        frame_t, frame_t1 = generate_sequence(get_preset("snowstorm"), 2)
        first = estimate_flow(frame_t, frame_t1, PipelineConfig())
        second = estimate_flow(frame_t, frame_t1, PipelineConfig())
        for name in ("delta", "dynamic", "valid", "cluster_id"):
            np.testing.assert_array_equal(getattr(first.flow, name), getattr(second.flow, name))

    def test_clusters_move_rigidly(self):
        """Every point of a LiDAR cluster carries the same displacement."""
        _, result, _ = _run_preset("highway-5-movers")
        ids = np.unique(result.flow.cluster_id[result.flow.cluster_id >= 0])
        assert len(ids) > 0
        for cid in ids:
            delta = result.flow.delta[result.flow.cluster_id == cid]
            assert (delta == delta[0]).all()


class TestConsecutivePairs:
    """Gaps in frame numbering."""

    def test_no_gaps(self):
        """Consecutive frame indices pair up in order."""
        assert consecutive_pairs([0, 1, 2]) == [(0, 1), (1, 2)]

    def test_gap(self, caplog):
        """A numbering gap drops the straddling pair with a warning."""
        with caplog.at_level(logging.WARNING):
            assert consecutive_pairs([0, 1, 3, 4]) == [(0, 1), (2, 3)]
        assert "gap in frame numbering: 000001 -> 000003" in caplog.text


class TestRunBatch:
    """Sequence directories in, flow files and a manifest out."""

    def test_one_flow_file_per_pair(self, tmp_path):
        """A five-frame sequence yields four flow files and a manifest."""
        _write_sequence(tmp_path / "seq")
        outputs = run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "out", seed=0)
        assert [o.frame_id for o in outputs] == ["000000", "000001", "000002", "000003"]
        assert sorted(p.name for p in (tmp_path / "out").glob("*.flow.csv")) == [
            "000000.flow.csv", "000001.flow.csv", "000002.flow.csv", "000003.flow.csv",
        ]
        flow = read_flow(tmp_path / "out" / "000000.flow.csv")
        assert flow.dynamic.any()

        manifest = read_manifest(tmp_path / "out")
        assert manifest.command == "batch"
        assert manifest.seed == 0
        assert set(manifest.frame_timings_ms) == {o.frame_id for o in outputs}
        assert "000003.flow.csv" in manifest.outputs

    def test_thread_count_does_not_change_output(self, tmp_path):
        """Serial and pooled runs write the same bytes and score the same."""
        frames = _write_sequence(tmp_path / "seq", n_frames=11)
        run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "serial", threads=1)
        run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "pooled", threads=8)
        serial = sorted((tmp_path / "serial").glob("*.flow.csv"))
        assert len(serial) == 10
        for path in serial:
            assert path.read_bytes() == (tmp_path / "pooled" / path.name).read_bytes()

        def _report(out):
            return evaluate([
                EvalInput(
                    f.frame_id,
                    f.lidar.positions,
                    read_flow(out / f"{f.frame_id}.flow.csv").delta,
                    f.gt.flow,
                    f.gt.classes,
                )
                for f in frames[:-1]
            ])

        assert _report(tmp_path / "serial") == _report(tmp_path / "pooled")

    def test_needs_two_frames(self, tmp_path):
        """A one-frame sequence cannot be labelled."""
        _write_sequence(tmp_path / "seq", n_frames=1)
        with pytest.raises(FrameValidationError, match="need at least two frames"):
            run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "out")

    def test_gap_skips_pair(self, tmp_path, caplog):
        """Pairs across a missing frame are skipped in batch runs."""
        _write_sequence(tmp_path / "seq", n_frames=4, keep={0, 1, 3})
        with caplog.at_level(logging.WARNING):
            outputs = run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "out")
        assert [o.frame_id for o in outputs] == ["000000"]
        assert "gap in frame numbering" in caplog.text

    def test_extra_outputs(self, tmp_path):
        """Binary, total and debug files land flat in the output directory and the manifest."""
        _write_sequence(tmp_path / "seq", n_frames=2)
        options = OutputOptions(binary=True, total=True, debug_dump=True)
        run_batch(tmp_path / "seq", PipelineConfig(), tmp_path / "out", options=options)
        out = tmp_path / "out"
        assert (out / "000000.flow.bin").exists()
        assert (out / "000000.total.csv").exists()
        assert (out / "debug.000000.radar_clusters.json").exists()
        assert (out / "debug.000000.clusters.ply").exists()
        assert not (out / "debug").exists()
        outputs = read_manifest(out).outputs
        assert "debug.000000.radar_clusters.json" in outputs
        assert "debug.000000.clusters.ply" in outputs
        text = read_flow(out / "000000.flow.csv")
        binary = read_flow(out / "000000.flow.bin")
        np.testing.assert_array_equal(text.delta, binary.delta)
