"""Frame directories on disk: text layout and the binary container.

Text layout, one directory per frame named by its zero-padded index::

    000042/lidar.csv   x,y,z,intensity
    000042/radar.csv   x,y,z,v_meas,sensor_id
    000042/ego.json    EgoState
    000042/gt.csv      dx,dy,dz,class          (optional)
    000042/frame.bin   binary container         (optional, preferred on read)
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..exceptions import FrameFormatError
from ..models import (
    CLASS_CODES,
    CLASS_NAMES,
    EgoState,
    Frame,
    GroundTruth,
    LidarFrame,
    RadarFrame,
)

logger = logging.getLogger(__name__)

LIDAR_COLUMNS = ("x", "y", "z", "intensity")
RADAR_COLUMNS = ("x", "y", "z", "v_meas", "sensor_id")
GT_COLUMNS = ("dx", "dy", "dz", "class")

FRAME_MAGIC = b"RFLFRAME"
FRAME_VERSION = 1
_HEADER = struct.Struct("<8sH6x")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

TEXT_FLOAT = "%.12g"


def frame_dir_name(index: int) -> str:
    return f"{index:06d}"


def list_frame_dirs(root: str | Path) -> list[tuple[int, Path]]:
    """(index, path) for every frame directory under ``root``, in index order."""
    root = Path(root)
    if not root.is_dir():
        raise FrameFormatError(f"not a directory: {root}")
    found = [
        (int(child.name), child)
        for child in root.iterdir()
        if child.is_dir() and child.name.isdigit()
    ]
    return sorted(found)


# -- text --------------------------------------------------------------------


def _format_rows(columns: list[np.ndarray], formats: list[str]) -> list[str]:
    rows = []
    for values in zip(*columns, strict=True):
        rows.append(",".join(fmt % v for fmt, v in zip(formats, values, strict=True)))
    return rows


def _write_csv(path: Path, header: tuple[str, ...], rows: list[str]) -> None:
    path.write_text("\n".join([",".join(header), *rows]) + "\n", encoding="utf-8")


def _read_csv(path: Path, header: tuple[str, ...]) -> list[list[str]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as e:
        raise FrameFormatError(f"missing file: {path}") from e
    if not lines or tuple(c.strip() for c in lines[0].split(",")) != header:
        raise FrameFormatError(f"{path}: expected header {','.join(header)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(header):
            raise FrameFormatError(
                f"{path}:{lineno}: expected {len(header)} columns, got {len(fields)}"
            )
        rows.append(fields)
    return rows


def _to_float(rows: list[list[str]], path: Path, ncols: int) -> np.ndarray:
    try:
        return np.array(rows, dtype=np.float64).reshape(len(rows), ncols)
    except ValueError as e:
        raise FrameFormatError(f"{path}: non-numeric value ({e})") from e


def write_frame_dir(frame: Frame, root: str | Path) -> Path:
    """Write ``frame`` as a text frame directory under ``root``; returns the directory."""
    directory = Path(root) / frame.frame_id
    directory.mkdir(parents=True, exist_ok=True)

    lidar = frame.lidar
    _write_csv(
        directory / "lidar.csv",
        LIDAR_COLUMNS,
        _format_rows([*lidar.positions.T, lidar.intensity], [TEXT_FLOAT] * 4),
    )
    radar = frame.radar
    _write_csv(
        directory / "radar.csv",
        RADAR_COLUMNS,
        _format_rows(
            [*radar.positions.T, radar.v_meas, radar.sensor_id], [TEXT_FLOAT] * 4 + ["%d"]
        ),
    )
    (directory / "ego.json").write_text(frame.ego.model_dump_json(indent=2), encoding="utf-8")
    if frame.gt is not None:
        names = np.array(CLASS_NAMES, dtype=object)[frame.gt.classes.astype(np.int64)]
        _write_csv(
            directory / "gt.csv",
            GT_COLUMNS,
            _format_rows([*frame.gt.flow.T, names], [TEXT_FLOAT] * 3 + ["%s"]),
        )
    return directory


def _read_ego(path: Path) -> EgoState:
    try:
        return EgoState.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise FrameFormatError(f"missing file: {path}") from e
    except ValidationError as e:
        raise FrameFormatError(f"{path}: {e}") from e


def read_frame_dir(directory: str | Path) -> Frame:
    """Read the text files of one frame directory.

    A missing ``radar.csv`` yields an empty radar frame (with a warning) so the
    pipeline can still emit an all-static flow.
    """
    directory = Path(directory)
    frame_id = directory.name
    frame_index = int(frame_id) if frame_id.isdigit() else 0

    lidar_path = directory / "lidar.csv"
    table = _to_float(_read_csv(lidar_path, LIDAR_COLUMNS), lidar_path, 4)
    lidar = LidarFrame(table[:, :3], table[:, 3], frame_index)

    radar_path = directory / "radar.csv"
    if radar_path.exists():
        table = _to_float(_read_csv(radar_path, RADAR_COLUMNS), radar_path, 5)
        sensor_id = table[:, 4]
        if not np.all(sensor_id == np.round(sensor_id)):
            raise FrameFormatError(f"{radar_path}: sensor_id must be an integer")
        radar = RadarFrame(table[:, :3], table[:, 3], sensor_id.astype(np.int64), frame_index)
    else:
        logger.warning("%s: no radar.csv, using an empty radar frame", directory)
        radar = RadarFrame.empty(frame_index)

    ego = _read_ego(directory / "ego.json")

    gt = None
    gt_path = directory / "gt.csv"
    if gt_path.exists():
        rows = _read_csv(gt_path, GT_COLUMNS)
        try:
            classes = np.array([CLASS_CODES[r[3]] for r in rows], dtype=np.int8)
        except KeyError as e:
            raise FrameFormatError(f"{gt_path}: unknown class {e.args[0]!r}") from e
        flow = _to_float([r[:3] for r in rows], gt_path, 3)
        if len(flow) != len(lidar):
            raise FrameFormatError(
                f"{gt_path}: {len(flow)} rows but lidar.csv has {len(lidar)} points"
            )
        gt = GroundTruth(flow, classes)

    return Frame(lidar=lidar, radar=radar, ego=ego, gt=gt, frame_id=frame_id)


# -- binary ------------------------------------------------------------------


def write_frame_binary(frame: Frame, root: str | Path) -> Path:
    """Write ``frame`` as ``<root>/<frame_id>/frame.bin``; returns the file path."""
    directory = Path(root) / frame.frame_id
    directory.mkdir(parents=True, exist_ok=True)
    ego = frame.ego.model_dump_json().encode("utf-8")

    parts = [_HEADER.pack(FRAME_MAGIC, FRAME_VERSION), _U32.pack(len(ego)), ego]
    parts.append(_U64.pack(len(frame.lidar)))
    parts.append(frame.lidar.positions.astype("<f8").tobytes())
    parts.append(frame.lidar.intensity.astype("<f8").tobytes())
    parts.append(_U64.pack(len(frame.radar)))
    parts.append(frame.radar.positions.astype("<f8").tobytes())
    parts.append(frame.radar.v_meas.astype("<f8").tobytes())
    parts.append(frame.radar.sensor_id.astype("<i4").tobytes())
    gt = frame.gt
    parts.append(_U64.pack(0 if gt is None else len(gt)))
    if gt is not None:
        parts.append(gt.flow.astype("<f8").tobytes())
        parts.append(gt.classes.astype("<u1").tobytes())

    path = directory / "frame.bin"
    path.write_bytes(b"".join(parts))
    return path


class _Reader:
    """Cursor over a bytes buffer that raises FrameFormatError on truncation."""

    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.data):
            raise FrameFormatError(f"{self.path}: truncated at byte {self.offset}")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dtype = np.dtype(dtype)
        if count == 0:
            return np.zeros(0, dtype=dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype)


def read_frame_binary(path: str | Path) -> Frame:
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic, version = reader.unpack(_HEADER)
    if magic != FRAME_MAGIC:
        raise FrameFormatError(f"{path}: bad magic {magic!r}")
    if version != FRAME_VERSION:
        raise FrameFormatError(f"{path}: unsupported version {version}")

    (ego_len,) = reader.unpack(_U32)
    try:
        ego = EgoState.model_validate_json(reader.take(ego_len))
    except ValidationError as e:
        raise FrameFormatError(f"{path}: {e}") from e

    frame_id = path.parent.name
    frame_index = int(frame_id) if frame_id.isdigit() else 0

    (n,) = reader.unpack(_U64)
    positions = reader.array("<f8", 3 * n).reshape(n, 3)
    intensity = reader.array("<f8", n)
    lidar = LidarFrame(positions, intensity, frame_index)

    (m,) = reader.unpack(_U64)
    radar = RadarFrame(
        reader.array("<f8", 3 * m).reshape(m, 3),
        reader.array("<f8", m),
        reader.array("<i4", m).astype(np.int64),
        frame_index,
    )

    (g,) = reader.unpack(_U64)
    gt = None
    if g:
        if g != n:
            raise FrameFormatError(f"{path}: {g} ground-truth rows for {n} LiDAR points")
        gt = GroundTruth(reader.array("<f8", 3 * g).reshape(g, 3), reader.array("<u1", g))
    if reader.offset != len(reader.data):
        raise FrameFormatError(f"{path}: {len(reader.data) - reader.offset} trailing bytes")
    return Frame(lidar=lidar, radar=radar, ego=ego, gt=gt, frame_id=frame_id)


def read_frame(directory: str | Path) -> Frame:
    """Read a frame directory, preferring ``frame.bin`` over the text files."""
    directory = Path(directory)
    binary = directory / "frame.bin"
    if binary.exists():
        return read_frame_binary(binary)
    return read_frame_dir(directory)
