"""
Scene geometry: LED/PD/IRS placement and per-link distances and angles.

Transceiver normal vectors are perpendicular to the ground, so every angle
below is measured from the vertical axis.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from back_end.vlc_core.shared.errors import GeometryError, SceneError

_BOUNDS_TOL = 1e-9


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class OpticalParams:
    """
    Receiver and reflector optics. Angles are in radians.
    """
    pd_area: float = 1e-4
    lambertian_index: float = 1.0
    filter_gain: float = 1.0
    refractive_index: float = 1.5
    fov_semi_angle: float = math.pi / 3
    irs_reflectivity: float = 0.9

    def __post_init__(self) -> None:
        errors = []
        if not self.pd_area > 0:
            errors.append(f"pd_area must be > 0, got {self.pd_area}")
        if not self.lambertian_index >= 0:
            errors.append(f"lambertian_index must be >= 0, got {self.lambertian_index}")
        if not self.filter_gain >= 0:
            errors.append(f"filter_gain must be >= 0, got {self.filter_gain}")
        if not self.refractive_index > 0:
            errors.append(f"refractive_index must be > 0, got {self.refractive_index}")
        if not 0 < self.fov_semi_angle <= math.pi / 2:
            errors.append(f"fov_semi_angle must lie in (0, pi/2], got {self.fov_semi_angle}")
        if not 0 <= self.irs_reflectivity <= 1:
            errors.append(f"irs_reflectivity must lie in [0, 1], got {self.irs_reflectivity}")
        if errors:
            raise SceneError("; ".join(errors))

    @classmethod
    def from_degrees(cls, fov_semi_angle_deg: float = 60.0, **kwargs) -> "OpticalParams":
        return cls(fov_semi_angle=math.radians(fov_semi_angle_deg), **kwargs)


@dataclass(frozen=True)
class LinkGeometry:
    distance: float
    tx_angle: float
    rx_angle: float


@dataclass(frozen=True)
class Scene:
    leds: Tuple[Point3, ...]
    pds: Tuple[Point3, ...]
    irs_units: Tuple[Point3, ...]
    optics: OpticalParams
    room_dims: Tuple[float, float, float]

    @property
    def n_leds(self) -> int:
        return len(self.leds)

    @property
    def n_pds(self) -> int:
        return len(self.pds)

    @property
    def n_units(self) -> int:
        return len(self.irs_units)

    def led_positions(self) -> np.ndarray:
        return _stack(self.leds)

    def pd_positions(self) -> np.ndarray:
        return _stack(self.pds)

    def irs_positions(self) -> np.ndarray:
        return _stack(self.irs_units)


@dataclass(frozen=True)
class SceneConfig:
    """
    Placement recipe for build_scene. Lengths in meters.

    irs_corners are two opposite corners of the IRS rectangle; they must
    share either the x or the y coordinate (the wall plane).
    """
    room_dims: Tuple[float, float, float] = (8.0, 8.0, 3.0)
    led_grid: Tuple[int, int] = (4, 4)
    pd_center: Tuple[float, float, float] = (2.0, 3.2, 1.0)
    pd_spacing: float = 0.2
    pd_grid: Tuple[int, int] = (2, 2)
    irs_corners: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = (
        (0.0, 1.0, 1.2),
        (0.0, 7.0, 2.9),
    )
    irs_grid: Tuple[int, int] = (8, 8)
    optics: OpticalParams = field(default_factory=OpticalParams)
    n_leds: Optional[int] = None
    n_pds: Optional[int] = None
    n_units: Optional[int] = None


def build_scene(cfg: SceneConfig) -> Scene:
    """
    Place LEDs, PDs and IRS units according to cfg and validate the result.

    LEDs sit at the centers of an equal-area partition of the ceiling (x
    fastest). PDs form a horizontal uniform planar array around pd_center
    (x fastest). IRS units sit at the cell centers of a uniform grid over the
    wall rectangle (horizontal axis fastest, then height).
    """
    width, depth, height = (float(v) for v in cfg.room_dims)
    if min(width, depth, height) <= 0:
        raise SceneError(f"Room dimensions must be positive, got {cfg.room_dims}")

    # LEDs
    nx, ny = (int(v) for v in cfg.led_grid)
    if nx < 1 or ny < 1:
        raise SceneError(f"LED grid must be at least 1x1, got {cfg.led_grid}")
    leds = tuple(
        Point3((i + 0.5) * width / nx, (j + 0.5) * depth / ny, height)
        for j in range(ny)
        for i in range(nx)
    )

    # PDs
    px, py = (int(v) for v in cfg.pd_grid)
    if px < 1 or py < 1:
        raise SceneError(f"PD grid must be at least 1x1, got {cfg.pd_grid}")
    cx, cy, cz = (float(v) for v in cfg.pd_center)
    pds = tuple(
        Point3(
            cx + (i - (px - 1) / 2) * cfg.pd_spacing,
            cy + (j - (py - 1) / 2) * cfg.pd_spacing,
            cz,
        )
        for j in range(py)
        for i in range(px)
    )

    irs_units = tuple(_irs_grid(cfg.irs_corners, cfg.irs_grid))

    # Declared counts
    errors = []
    for name, declared, actual in (
        ("LED", cfg.n_leds, len(leds)),
        ("PD", cfg.n_pds, len(pds)),
        ("IRS unit", cfg.n_units, len(irs_units)),
    ):
        if declared is not None and int(declared) != actual:
            errors.append(f"declared {declared} {name}s but the grid yields {actual}")
    if errors:
        raise SceneError("; ".join(errors))

    scene = Scene(
        leds=leds,
        pds=pds,
        irs_units=irs_units,
        optics=cfg.optics,
        room_dims=(width, depth, height),
    )
    _validate_scene(scene)
    logging.debug(
        f"Built scene: {scene.n_leds} LEDs, {scene.n_pds} PDs, {scene.n_units} IRS units"
    )
    return scene


def los_geometry(tx: Point3, rx: Point3) -> LinkGeometry:
    """
    Distance and irradiance/incidence angle of a direct link.
    """
    delta = tx.as_array() - rx.as_array()
    distance = float(np.linalg.norm(delta))
    if distance == 0.0:
        raise GeometryError(f"Coincident LoS endpoints at {tx}")
    angle = _vertical_angle(delta[2], distance)
    return LinkGeometry(distance=distance, tx_angle=angle, rx_angle=angle)


def nlos_geometry(tx: Point3, unit: Point3, rx: Point3) -> Tuple[LinkGeometry, LinkGeometry]:
    """
    Geometry of the two legs tx -> unit -> rx of a specular IRS path.

    The first leg carries the irradiance angle at the LED, the second the
    incidence angle at the PD.
    """
    first = tx.as_array() - unit.as_array()
    second = unit.as_array() - rx.as_array()
    d1 = float(np.linalg.norm(first))
    d2 = float(np.linalg.norm(second))
    if d1 == 0.0:
        raise GeometryError(f"IRS unit at {unit} coincides with LED")
    if d2 == 0.0:
        raise GeometryError(f"IRS unit at {unit} coincides with PD")
    theta = _vertical_angle(first[2], d1)
    phi = _vertical_angle(second[2], d2)
    return (
        LinkGeometry(distance=d1, tx_angle=theta, rx_angle=theta),
        LinkGeometry(distance=d2, tx_angle=phi, rx_angle=phi),
    )


def _vertical_angle(dz: float, distance: float) -> float:
    return float(np.arccos(np.clip(dz / distance, -1.0, 1.0)))


def _irs_grid(corners, grid) -> List[Point3]:
    n_h, n_z = (int(v) for v in grid)
    if n_h < 0 or n_z < 0:
        raise SceneError(f"IRS grid must be nonnegative, got {grid}")
    if n_h == 0 or n_z == 0:
        return []

    c0 = np.asarray(corners[0], dtype=float)
    c1 = np.asarray(corners[1], dtype=float)
    if c0[0] == c1[0]:
        # Wall of constant x, spans y
        h_axis = 1
    elif c0[1] == c1[1]:
        # Wall of constant y, spans x
        h_axis = 0
    else:
        raise SceneError(f"IRS corners {corners} do not lie on a wall plane")

    h_lo, h_hi = sorted((c0[h_axis], c1[h_axis]))
    z_lo, z_hi = sorted((c0[2], c1[2]))
    units = []
    for j in range(n_z):
        z = z_lo + (j + 0.5) * (z_hi - z_lo) / n_z
        for i in range(n_h):
            h = h_lo + (i + 0.5) * (h_hi - h_lo) / n_h
            coords = c0.copy()
            coords[h_axis] = h
            coords[2] = z
            units.append(Point3(*coords))
    return units


def _validate_scene(scene: Scene) -> None:
    width, depth, height = scene.room_dims
    errors = []
    for kind, points in (("LED", scene.leds), ("PD", scene.pds), ("IRS unit", scene.irs_units)):
        for idx, p in enumerate(points):
            if not all(math.isfinite(c) for c in (p.x, p.y, p.z)):
                errors.append(f"{kind} {idx} has non-finite coordinates {p}")
                continue
            inside = (
                -_BOUNDS_TOL <= p.x <= width + _BOUNDS_TOL
                and -_BOUNDS_TOL <= p.y <= depth + _BOUNDS_TOL
                and -_BOUNDS_TOL <= p.z <= height + _BOUNDS_TOL
            )
            if not inside:
                errors.append(f"{kind} {idx} at ({p.x}, {p.y}, {p.z}) lies outside the room")

    if scene.pds and scene.leds:
        lowest_led = min(p.z for p in scene.leds)
        highest_pd = max(p.z for p in scene.pds)
        if lowest_led < highest_pd:
            errors.append(f"LED height {lowest_led} is below PD height {highest_pd}")

    # Coincident points would produce zero-length links
    everything = np.vstack([a for a in (_stack(scene.leds), _stack(scene.pds), _stack(scene.irs_units)) if len(a)])
    if len(np.unique(everything, axis=0)) < len(everything):
        errors.append("scene contains coincident points")

    if errors:
        raise SceneError("; ".join(errors))


def _stack(points) -> np.ndarray:
    if not points:
        return np.zeros((0, 3))
    return np.array([[p.x, p.y, p.z] for p in points], dtype=float)
