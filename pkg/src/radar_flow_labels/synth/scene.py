"""Synthetic rigid-body scenes with LiDAR, Doppler radar and exact ground truth.

Geometry:
    * World coordinates are the ego frame of frame 0. The ego translates by
      ``v_ego * dt`` per frame without rotating; every emitted frame is expressed
      in its own ego frame.
    * Bodies are axis-aligned boxes translating at constant velocity. They float
      at a ride height so grid ground removal never shaves them.
    * Ground is a flat lattice at z = 0 around the ego plus a patch under every
      body footprint, so each occupied grid cell also holds ground.

LiDAR samples on bodies are drawn once (faces visible from the LiDAR at frame 0)
and carried rigidly; radar returns, ghosts, clutter and sensor noise are redrawn
per frame from per-frame sub-seeds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..exceptions import SceneSpecError
from ..models import (
    CLASS_CODES,
    EgoState,
    Frame,
    GroundTruth,
    LidarFrame,
    RadarFrame,
    SensorExtrinsic,
    Vector3,
)

logger = logging.getLogger(__name__)

RIDE_HEIGHT = 0.4
GROUND_PATCH_MARGIN = 3.0
BODY_INTENSITY = (0.1, 1.0)
GROUND_INTENSITY = (0.05, 0.3)
CLUTTER_INTENSITY = (0.0, 0.007)
CLUTTER_HEIGHT = (0.5, 3.0)
GHOST_FACTORS = (-1.0, 0.5)
FD_THRESHOLD = 0.05


class RigidBody(BaseModel):
    """An axis-aligned box translating at constant velocity."""

    model_config = ConfigDict(frozen=True)

    center: Vector3
    extents: Vector3
    velocity: Vector3 = (0.0, 0.0, 0.0)
    name: str = ""

    @field_validator("extents")
    @classmethod
    def _extents_positive(cls, value: Vector3) -> Vector3:
        if min(value) <= 0:
            raise ValueError("box extents must be positive")
        return value

    def motion_class(self, dt: float) -> int:
        """FD when the body moves more than 5 cm per frame, else FS."""
        moved = math.hypot(*self.velocity) * dt
        return CLASS_CODES["FD"] if moved > FD_THRESHOLD else CLASS_CODES["FS"]


class RadarSpec(BaseModel):
    """One radar: mounting yaw and position, horizontal field of view, range."""

    model_config = ConfigDict(frozen=True)

    yaw_deg: float = 0.0
    translation: Vector3 = (0.0, 0.0, 0.5)
    fov_deg: float = Field(default=120.0, gt=0.0, le=360.0)
    max_range: float = Field(default=250.0, gt=0.0)

    def extrinsic(self) -> SensorExtrinsic:
        return SensorExtrinsic.from_yaw(self.yaw_deg, self.translation)

    def sees(self, points: np.ndarray) -> np.ndarray:
        """Mask of ego-frame points inside this radar's field of view and range."""
        extrinsic = self.extrinsic()
        local = (np.asarray(points).reshape(-1, 3) - extrinsic.origin) @ extrinsic.matrix.T
        azimuth = np.degrees(np.arctan2(local[:, 1], local[:, 0]))
        in_range = np.linalg.norm(local, axis=1) <= self.max_range
        return in_range & (np.abs(azimuth) <= self.fov_deg / 2.0)


def _surround_radars() -> list[RadarSpec]:
    return [
        RadarSpec(yaw_deg=0.0, translation=(2.0, 0.0, 0.5)),
        RadarSpec(yaw_deg=90.0, translation=(0.0, 1.0, 0.5)),
        RadarSpec(yaw_deg=180.0, translation=(-2.0, 0.0, 0.5)),
        RadarSpec(yaw_deg=270.0, translation=(0.0, -1.0, 0.5)),
    ]


class NoiseSpec(BaseModel):
    """Sensor noise and corruption channels; all zero means a noise-free oracle."""

    model_config = ConfigDict(frozen=True)

    doppler_sigma: float = Field(default=0.0, ge=0.0)
    lidar_sigma: float = Field(default=0.0, ge=0.0)
    clutter_fraction: float = Field(default=0.0, ge=0.0, lt=1.0)
    ghost_probability: float = Field(default=0.0, ge=0.0, le=1.0)
    reflector_offset: float = Field(default=0.3, gt=0.0)
    clutter_clearance: float = Field(default=1.5, ge=0.0)
    clutter_radius: float = Field(default=40.0, gt=0.0)


class SceneSpec(BaseModel):
    """Everything needed to generate a synthetic sequence; ``seed`` fixes the output."""

    model_config = ConfigDict(frozen=True)

    bodies: list[RigidBody] = Field(default_factory=list)
    v_ego: Vector3 = (10.0, 0.0, 0.0)
    dt: float = Field(default=0.1, gt=0.0)
    radars: list[RadarSpec] = Field(default_factory=_surround_radars)
    lidar_origin: Vector3 = (0.0, 0.0, 1.8)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)
    seed: int = 0
    ground: bool = True
    ground_radius: float = Field(default=30.0, gt=0.0)
    ground_spacing: float = Field(default=0.5, gt=0.0)
    # Points per square meter up to density_ref_range, then falling off as 1/r
    lidar_density: float = Field(default=40.0, gt=0.0)
    density_ref_range: float = Field(default=50.0, gt=0.0)
    radar_points_per_body: int = Field(default=12, ge=0)

    def ego_state(self) -> EgoState:
        return EgoState(
            v_ego=self.v_ego,
            dt=self.dt,
            sensor_extrinsics=[r.extrinsic() for r in self.radars],
        )


def box_on_road(
    x: float,
    y: float,
    size: Vector3 = (4.5, 1.8, 1.5),
    velocity: Vector3 = (0.0, 0.0, 0.0),
    name: str = "",
) -> RigidBody:
    """Box of ``size`` (length, width, height) whose underside sits at ride height."""
    return RigidBody(
        center=(x, y, RIDE_HEIGHT + size[2] / 2.0), extents=size, velocity=velocity, name=name
    )


# -- geometry helpers -------------------------------------------------------------


def _faces(extents: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, int, int]]:
    """(outward normal, center offset, in-plane axis b, in-plane axis c) per box face."""
    half = extents / 2.0
    faces = []
    for axis in range(3):
        b, c = [a for a in range(3) if a != axis]
        for sign in (1.0, -1.0):
            normal = np.zeros(3)
            normal[axis] = sign
            faces.append((normal, normal * half[axis], b, c))
    return faces


def _visible_faces(center: np.ndarray, extents: np.ndarray, origin: np.ndarray) -> list:
    return [
        face for face in _faces(extents)
        if float(face[0] @ (origin - (center + face[1]))) > 0.0
    ]


def _face_area(face, extents: np.ndarray) -> float:
    _, _, b, c = face
    return float(extents[b] * extents[c])


def _sample_face(
    face, extents: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """``n`` uniform offsets (from the box center) on one face."""
    _, offset, b, c = face
    samples = np.tile(offset, (n, 1))
    samples[:, b] += rng.uniform(-extents[b] / 2.0, extents[b] / 2.0, n)
    samples[:, c] += rng.uniform(-extents[c] / 2.0, extents[c] / 2.0, n)
    return samples


def box_distance(points: np.ndarray, center: np.ndarray, extents: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to a solid axis-aligned box (0 inside)."""
    outside = np.maximum(np.abs(np.asarray(points) - center) - extents / 2.0, 0.0)
    return np.linalg.norm(outside, axis=1)


# -- generation -------------------------------------------------------------------


@dataclass(frozen=True)
class _BodySamples:
    """LiDAR offsets and intensities for one body, fixed for the whole sequence."""

    offsets: np.ndarray
    intensity: np.ndarray


def _sample_body_lidar(
    body: RigidBody, spec: SceneSpec, rng: np.random.Generator
) -> _BodySamples:
    center = np.asarray(body.center)
    extents = np.asarray(body.extents)
    origin = np.asarray(spec.lidar_origin)
    chunks = []
    for face in _visible_faces(center, extents, origin):
        face_range = float(np.linalg.norm(center + face[1]))
        density = spec.lidar_density / max(1.0, face_range / spec.density_ref_range)
        n = int(round(_face_area(face, extents) * density))
        if n:
            chunks.append(_sample_face(face, extents, n, rng))
    offsets = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    intensity = rng.uniform(*BODY_INTENSITY, len(offsets))
    return _BodySamples(offsets, intensity)


def _lattice_disc(center_xy: np.ndarray, radius: float, spacing: float) -> np.ndarray:
    lo = np.floor((center_xy - radius) / spacing).astype(np.int64)
    hi = np.ceil((center_xy + radius) / spacing).astype(np.int64)
    i, j = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    cells = np.column_stack([i.ravel(), j.ravel()])
    inside = np.linalg.norm(cells * spacing - center_xy, axis=1) <= radius
    return cells[inside]


def _lattice_box(lo_xy: np.ndarray, hi_xy: np.ndarray, spacing: float) -> np.ndarray:
    lo = np.floor(lo_xy / spacing).astype(np.int64)
    hi = np.ceil(hi_xy / spacing).astype(np.int64)
    i, j = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    return np.column_stack([i.ravel(), j.ravel()])


def _body_patches(spec: SceneSpec, n_frames: int) -> np.ndarray:
    """World lattice indices under every body footprint over the whole sequence."""
    patches = [np.zeros((0, 2), dtype=np.int64)]
    for body in spec.bodies:
        center = np.asarray(body.center[:2])
        half = np.asarray(body.extents[:2]) / 2.0 + GROUND_PATCH_MARGIN
        travel = np.asarray(body.velocity[:2]) * spec.dt * (n_frames - 1)
        start, end = center, center + travel
        patches.append(
            _lattice_box(np.minimum(start, end) - half, np.maximum(start, end) + half,
                         spec.ground_spacing)
        )
    return np.concatenate(patches)


def _doppler(
    positions: np.ndarray,
    sensor_id: np.ndarray,
    relative_velocity: np.ndarray,
    ego: EgoState,
) -> tuple[np.ndarray, np.ndarray]:
    """(radial velocity along the sensor line of sight, rows u^T R) per point."""
    rotations = ego.rotations()[sensor_id]
    local = np.einsum("nij,nj->ni", rotations, positions - ego.translations()[sensor_id])
    u = local / np.linalg.norm(local, axis=1, keepdims=True)
    rows = np.einsum("ni,nij->nj", u, rotations)
    return np.einsum("ni,ni->n", rows, relative_velocity), rows


def _place_clutter(
    count: int,
    centers: list[np.ndarray],
    spec: SceneSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    noise = spec.noise
    placed: list[np.ndarray] = []
    have = 0
    for _ in range(100):
        if have >= count:
            break
        batch = max(2 * (count - have), 16)
        radius = noise.clutter_radius * np.sqrt(rng.uniform(0.0, 1.0, batch))
        theta = rng.uniform(0.0, 2.0 * np.pi, batch)
        z = rng.uniform(*CLUTTER_HEIGHT, batch)
        candidates = np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])
        keep = np.ones(batch, dtype=bool)
        for center, body in zip(centers, spec.bodies, strict=True):
            keep &= box_distance(candidates, center, np.asarray(body.extents)) >= (
                noise.clutter_clearance
            )
        accepted = candidates[keep][: count - have]
        placed.append(accepted)
        have += len(accepted)
    if have < count:
        raise SceneSpecError(
            f"could only place {have}/{count} clutter points; lower clutter_clearance "
            "or raise clutter_radius"
        )
    return np.concatenate(placed) if placed else np.zeros((0, 3))


def _radar_returns(
    spec: SceneSpec,
    centers: list[np.ndarray],
    ego: EgoState,
    frame_index: int,
    rng: np.random.Generator,
) -> RadarFrame:
    origin = np.asarray(spec.lidar_origin)
    v_ego = np.asarray(spec.v_ego)
    positions, velocities = [], []
    for center, body in zip(centers, spec.bodies, strict=True):
        extents = np.asarray(body.extents)
        faces = _visible_faces(center, extents, origin)
        n = spec.radar_points_per_body
        if not faces or n == 0:
            continue
        areas = np.array([_face_area(f, extents) for f in faces])
        choice = rng.choice(len(faces), size=n, p=areas / areas.sum())
        samples = np.concatenate(
            [_sample_face(faces[k], extents, 1, rng) for k in choice.tolist()]
        )
        positions.append(center + samples)
        velocities.append(np.tile(body.velocity, (n, 1)))

    if not positions:
        return RadarFrame.empty(frame_index)
    positions = np.concatenate(positions)
    velocities = np.concatenate(velocities)

    sensor_id = np.full(len(positions), -1, dtype=np.int64)
    for k, radar in reversed(list(enumerate(spec.radars))):
        sensor_id[radar.sees(positions)] = k
    seen = sensor_id >= 0
    positions, velocities, sensor_id = positions[seen], velocities[seen], sensor_id[seen]
    if len(positions) == 0:
        return RadarFrame.empty(frame_index)

    v_meas, _ = _doppler(positions, sensor_id, velocities - v_ego, ego)
    v_meas = v_meas + rng.normal(0.0, spec.noise.doppler_sigma, len(v_meas))

    ghosts = rng.uniform(0.0, 1.0, len(positions)) < spec.noise.ghost_probability
    factors = rng.choice(GHOST_FACTORS, size=len(positions))
    if ghosts.any():
        source = np.flatnonzero(ghosts)
        ego_term, _ = _doppler(positions[source], sensor_id[source],
                               np.tile(v_ego, (len(source), 1)), ego)
        source_v_comp = v_meas[source] + ego_term

        ghost_positions = positions[source].copy()
        side = np.where(ghost_positions[:, 1] >= 0.0, 1.0, -1.0)
        ghost_positions[:, 1] += 2.0 * side * spec.noise.reflector_offset
        ghost_ego_term, _ = _doppler(ghost_positions, sensor_id[source],
                                     np.tile(v_ego, (len(source), 1)), ego)
        ghost_v_meas = factors[source] * source_v_comp - ghost_ego_term

        positions = np.concatenate([positions, ghost_positions])
        v_meas = np.concatenate([v_meas, ghost_v_meas])
        sensor_id = np.concatenate([sensor_id, sensor_id[source]])
    return RadarFrame(positions, v_meas, sensor_id, frame_index)


def generate_sequence(spec: SceneSpec, n_frames: int = 2) -> list[Frame]:
    """Generate ``n_frames`` consecutive frames with ground truth.

    Raises:
        SceneSpecError: no bodies and no ground, or ``n_frames`` < 1.
    """
    if not spec.bodies and not spec.ground:
        raise SceneSpecError("empty scene: no bodies and ground disabled")
    if n_frames < 1:
        raise SceneSpecError(f"n_frames must be at least 1, got {n_frames}")

    body_seeds, frame_seeds = np.random.SeedSequence(spec.seed).spawn(2)
    samples = [
        _sample_body_lidar(body, spec, np.random.default_rng(seed))
        for body, seed in zip(spec.bodies, body_seeds.spawn(len(spec.bodies)), strict=True)
    ]
    patches = _body_patches(spec, n_frames) if spec.ground else None
    ego = spec.ego_state()
    v_ego = np.asarray(spec.v_ego)

    frames = []
    for k, seed in enumerate(frame_seeds.spawn(n_frames)):
        rng = np.random.default_rng(seed)
        ego_position = v_ego * spec.dt * k
        centers = [
            np.asarray(b.center) + np.asarray(b.velocity) * spec.dt * k - ego_position
            for b in spec.bodies
        ]

        positions = [c + s.offsets for c, s in zip(centers, samples, strict=True)]
        intensity = [s.intensity for s in samples]
        flow = [np.tile(np.asarray(b.velocity) * spec.dt, (len(s.offsets), 1))
                for b, s in zip(spec.bodies, samples, strict=True)]
        classes = [np.full(len(s.offsets), b.motion_class(spec.dt), dtype=np.int8)
                   for b, s in zip(spec.bodies, samples, strict=True)]

        if spec.ground:
            cells = np.unique(
                np.concatenate([
                    _lattice_disc(ego_position[:2], spec.ground_radius, spec.ground_spacing),
                    patches,
                ]),
                axis=0,
            )
            ground = np.column_stack([cells * spec.ground_spacing - ego_position[:2],
                                      np.zeros(len(cells))])
            positions.append(ground)
            intensity.append(rng.uniform(*GROUND_INTENSITY, len(ground)))
            flow.append(np.zeros((len(ground), 3)))
            classes.append(np.full(len(ground), CLASS_CODES["BS"], dtype=np.int8))

        n_solid = sum(len(p) for p in positions)
        fraction = spec.noise.clutter_fraction
        n_clutter = int(round(fraction / (1.0 - fraction) * n_solid))
        if n_clutter:
            clutter = _place_clutter(n_clutter, centers, spec, rng)
            positions.append(clutter)
            intensity.append(rng.uniform(*CLUTTER_INTENSITY, len(clutter)))
            flow.append(np.zeros((len(clutter), 3)))
            classes.append(np.full(len(clutter), CLASS_CODES["BS"], dtype=np.int8))

        points = np.concatenate(positions)
        points = points + rng.normal(0.0, spec.noise.lidar_sigma, points.shape)
        radar = _radar_returns(spec, centers, ego, k, rng)
        frames.append(
            Frame(
                lidar=LidarFrame(points, np.concatenate(intensity), k),
                radar=radar,
                ego=ego,
                gt=GroundTruth(np.concatenate(flow), np.concatenate(classes)),
                frame_id=f"{k:06d}",
            )
        )
    logger.debug(
        "generated %d frame(s): %d bodies, %d LiDAR / %d radar points in frame 0",
        n_frames, len(spec.bodies), len(frames[0].lidar), len(frames[0].radar),
    )
    return frames


def generate_frame_pair(
    spec: SceneSpec,
) -> tuple[Frame, Frame, np.ndarray, np.ndarray]:
    """(frame t, frame t+1, GT non-ego flow of frame t, GT classes of frame t)."""
    frame_t, frame_t1 = generate_sequence(spec, 2)
    return frame_t, frame_t1, frame_t.gt.flow, frame_t.gt.classes


# -- scene files -------------------------------------------------------------------


def load_scene_file(path: str | Path) -> tuple[SceneSpec, dict]:
    """Load a TOML scene file; returns the SceneSpec and the overrides it applied.

    The file may name a ``preset`` to start from; every other key overrides
    the matching SceneSpec field (a ``[noise]`` table is merged key by key).
    """
    from .presets import get_preset

    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise SceneSpecError(f"scene file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        # tomllib reports "(at line N, column M)"
        raise SceneSpecError(f"{path}: {e}") from e

    preset = data.pop("preset", None)
    base = get_preset(preset).model_dump() if preset else {}
    unknown = sorted(set(data) - set(SceneSpec.model_fields))
    if unknown:
        raise SceneSpecError(f"{path}: unknown scene key(s): {', '.join(unknown)}")

    merged = dict(base)
    for key, value in data.items():
        if key == "noise" and isinstance(value, dict):
            merged["noise"] = {**base.get("noise", {}), **value}
        else:
            merged[key] = value
    try:
        spec = SceneSpec.model_validate(merged)
    except ValidationError as e:
        raise SceneSpecError(f"{path}: {e}") from e
    overrides = {"preset": preset, **data} if preset else data
    return spec, overrides
