"""Named scene presets.

Movers are placed so the radar sees a clear radial velocity component, and
they stay well apart from each other and from parked objects. With all noise
channels at zero, the pipeline should then reproduce the ground truth exactly.
"""

from __future__ import annotations

from collections.abc import Callable

from ..exceptions import SceneSpecError
from .scene import NoiseSpec, RadarSpec, SceneSpec, box_on_road

TRUCK = (8.0, 2.5, 3.0)
BARRIER = (6.0, 0.5, 1.0)
WALL = (40.0, 0.3, 2.0)


def static_world(seed: int = 0) -> SceneSpec:
    """Parked objects only; the ego drives and every radar is yawed."""
    return SceneSpec(
        bodies=[
            box_on_road(15.0, 6.0, name="parked-car"),
            box_on_road(30.0, -7.0, TRUCK, name="parked-truck"),
            box_on_road(-12.0, 5.0, name="parked-car-behind"),
            box_on_road(45.0, 8.0, BARRIER, name="barrier"),
        ],
        v_ego=(10.0, 0.0, 0.0),
        seed=seed,
    )


def highway_5_movers(seed: int = 0) -> SceneSpec:
    """Five moving vehicles across both range bins plus two parked objects."""
    return SceneSpec(
        bodies=[
            box_on_road(25.0, 3.5, velocity=(20.0, 0.0, 0.0), name="lead"),
            box_on_road(-20.0, -3.5, velocity=(25.0, 0.0, 0.0), name="overtaker"),
            box_on_road(60.0, 3.5, TRUCK, velocity=(18.0, 0.0, 0.0), name="far-truck"),
            box_on_road(40.0, -7.0, velocity=(-15.0, 0.0, 0.0), name="oncoming"),
            box_on_road(-45.0, 7.0, velocity=(28.0, 0.0, 0.0), name="chaser"),
            box_on_road(15.0, -9.0, TRUCK, name="parked-truck"),
            box_on_road(-8.0, 9.0, BARRIER, name="barrier"),
        ],
        v_ego=(15.0, 0.0, 0.0),
        seed=seed,
    )


def long_range_mover(seed: int = 0) -> SceneSpec:
    """A single truck 150 m ahead, driving away."""
    return SceneSpec(
        bodies=[box_on_road(150.0, 0.0, TRUCK, velocity=(25.0, 0.0, 0.0), name="far-truck")],
        v_ego=(10.0, 0.0, 0.0),
        seed=seed,
    )


def blindspot_lateral(seed: int = 0) -> SceneSpec:
    """Front and rear radars only; one mover alongside the ego, in the coverage gap."""
    return SceneSpec(
        bodies=[
            box_on_road(0.0, 8.0, velocity=(12.0, 0.0, 0.0), name="alongside"),
            box_on_road(30.0, 3.5, velocity=(20.0, 0.0, 0.0), name="lead"),
        ],
        radars=[
            RadarSpec(yaw_deg=0.0, translation=(2.0, 0.0, 0.5), fov_deg=120.0),
            RadarSpec(yaw_deg=180.0, translation=(-2.0, 0.0, 0.5), fov_deg=120.0),
        ],
        v_ego=(10.0, 0.0, 0.0),
        seed=seed,
    )


def snowstorm(seed: int = 0) -> SceneSpec:
    """Two movers and a parked truck in heavy low-intensity clutter."""
    return SceneSpec(
        bodies=[
            box_on_road(20.0, 3.5, velocity=(15.0, 0.0, 0.0), name="lead"),
            box_on_road(-18.0, -3.5, velocity=(20.0, 0.0, 0.0), name="follower"),
            box_on_road(12.0, -9.0, TRUCK, name="parked-truck"),
        ],
        v_ego=(10.0, 0.0, 0.0),
        noise=NoiseSpec(clutter_fraction=0.3),
        seed=seed,
    )


def ghost_alley(seed: int = 0) -> SceneSpec:
    """Movers between two long walls; half of all radar returns spawn a multipath ghost."""
    return SceneSpec(
        bodies=[
            box_on_road(22.0, 3.0, velocity=(20.0, 0.0, 0.0), name="lead"),
            box_on_road(-20.0, -3.0, velocity=(22.0, 0.0, 0.0), name="follower"),
            box_on_road(10.0, 11.0, WALL, name="left-wall"),
            box_on_road(10.0, -11.0, WALL, name="right-wall"),
        ],
        v_ego=(10.0, 0.0, 0.0),
        noise=NoiseSpec(ghost_probability=0.5),
        seed=seed,
    )


PRESETS: dict[str, Callable[[int], SceneSpec]] = {
    "static-world": static_world,
    "highway-5-movers": highway_5_movers,
    "long-range-mover": long_range_mover,
    "blindspot-lateral": blindspot_lateral,
    "snowstorm": snowstorm,
    "ghost-alley": ghost_alley,
}


def preset_scenes() -> dict[str, SceneSpec]:
    """Every preset at seed 0, keyed by name."""
    return {name: factory(0) for name, factory in PRESETS.items()}


def get_preset(name: str, seed: int | None = None) -> SceneSpec:
    """Build a preset; ``seed`` replaces the preset's default seed.

    Raises:
        SceneSpecError: unknown name (the message lists the catalog).
    """
    if name not in PRESETS:
        raise SceneSpecError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PRESETS[name](0 if seed is None else seed)
