"""Flow (pseudo-label) files: one row per LiDAR point."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..exceptions import FrameFormatError
from ..models import FlowField

FLOW_COLUMNS = ("dx", "dy", "dz", "dynamic", "valid", "cluster_id")
TOTAL_COLUMNS = ("tx", "ty", "tz")

FLOW_MAGIC = b"RFLFLOW\0"
FLOW_VERSION = 1
_HEADER = struct.Struct("<8sH6x")
_U64 = struct.Struct("<Q")

# Shortest repr that round-trips a float64 exactly
EXACT_FLOAT = "%.17g"


class FlowWriter:
    """Write flow files for a sequence into one output directory."""

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def write(self, flow: FlowField, frame_id: str, binary: bool = False) -> list[Path]:
        """Write ``<frame_id>.flow.csv`` (and ``.flow.bin`` when ``binary``).

        Returns:
            Paths of the files written
        """
        paths = [self.write_text(flow, frame_id)]
        if binary:
            paths.append(self.write_binary(flow, frame_id))
        return paths

    def write_text(self, flow: FlowField, frame_id: str) -> Path:
        path = self.output_dir / f"{frame_id}.flow.csv"
        lines = [",".join(FLOW_COLUMNS)]
        for delta, dynamic, valid, cluster in zip(
            flow.delta, flow.dynamic, flow.valid, flow.cluster_id, strict=True
        ):
            dx, dy, dz = (EXACT_FLOAT % v for v in delta)
            lines.append(f"{dx},{dy},{dz},{int(dynamic)},{int(valid)},{int(cluster)}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def write_binary(self, flow: FlowField, frame_id: str) -> Path:
        path = self.output_dir / f"{frame_id}.flow.bin"
        path.write_bytes(
            b"".join(
                [
                    _HEADER.pack(FLOW_MAGIC, FLOW_VERSION),
                    _U64.pack(len(flow)),
                    flow.delta.astype("<f8").tobytes(),
                    flow.dynamic.astype("<u1").tobytes(),
                    flow.valid.astype("<u1").tobytes(),
                    flow.cluster_id.astype("<i8").tobytes(),
                ]
            )
        )
        return path

    def write_total(self, total: np.ndarray, frame_id: str) -> Path:
        """Write total (ego + non-ego) flow as ``<frame_id>.total.csv``."""
        path = self.output_dir / f"{frame_id}.total.csv"
        lines = [",".join(TOTAL_COLUMNS)]
        lines.extend(",".join(EXACT_FLOAT % v for v in row) for row in np.asarray(total))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path


def flow_frame_id(path: str | Path) -> str:
    """``000007.flow.csv`` -> ``000007``."""
    return Path(path).name.split(".", 1)[0]


def _read_flow_text(path: Path) -> FlowField:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != FLOW_COLUMNS:
        raise FrameFormatError(f"{path}: expected header {','.join(FLOW_COLUMNS)}")
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(FLOW_COLUMNS):
            raise FrameFormatError(f"{path}:{lineno}: expected {len(FLOW_COLUMNS)} columns")
    try:
        table = np.array(rows, dtype=np.float64).reshape(len(rows), len(FLOW_COLUMNS))
    except ValueError as e:
        raise FrameFormatError(f"{path}: non-numeric value ({e})") from e
    return FlowField(
        delta=table[:, :3],
        dynamic=table[:, 3] != 0,
        valid=table[:, 4] != 0,
        cluster_id=table[:, 5].astype(np.int64),
    )


def _read_flow_binary(path: Path) -> FlowField:
    data = path.read_bytes()
    if len(data) < _HEADER.size + _U64.size:
        raise FrameFormatError(f"{path}: truncated header")
    magic, version = _HEADER.unpack_from(data, 0)
    if magic != FLOW_MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}")
    if version != FLOW_VERSION:
        raise FrameFormatError(f"{path}: unsupported version {version}")
    (n,) = _U64.unpack_from(data, _HEADER.size)
    offset = _HEADER.size + _U64.size
    expected = offset + n * (24 + 1 + 1 + 8)
    if len(data) != expected:
        raise FrameFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    if n == 0:
        return FlowField.zeros(0)

    delta = np.frombuffer(data, dtype="<f8", count=3 * n, offset=offset).reshape(n, 3)
    offset += 24 * n
    dynamic = np.frombuffer(data, dtype="<u1", count=n, offset=offset)
    offset += n
    valid = np.frombuffer(data, dtype="<u1", count=n, offset=offset)
    offset += n
    cluster_id = np.frombuffer(data, dtype="<i8", count=n, offset=offset)
    return FlowField(delta=delta, dynamic=dynamic != 0, valid=valid != 0, cluster_id=cluster_id)


def read_flow(path: str | Path) -> FlowField:
    """Load a ``.flow.csv`` or ``.flow.bin`` file."""
    path = Path(path)
    if not path.exists():
        raise FrameFormatError(f"missing flow file: {path}")
    if path.suffix == ".bin":
        return _read_flow_binary(path)
    return _read_flow_text(path)
