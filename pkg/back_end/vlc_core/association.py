"""
IRS configuration: unit-to-PD (f) and unit-to-LED (g) assignments and the
link matrix V whose column n_r + n_t * N_r is f[:, n_r] * g[:, n_t].
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from back_end.vlc_core.scene import Scene
from back_end.vlc_core.shared.common import make_rng
from back_end.vlc_core.shared.errors import DimensionError


@dataclass(frozen=True)
class Assignment:
    f: np.ndarray  # N x N_r
    g: np.ndarray  # N x N_t

    @property
    def n_units(self) -> int:
        return self.f.shape[0]

    @property
    def n_pds(self) -> int:
        return self.f.shape[1]

    @property
    def n_leds(self) -> int:
        return self.g.shape[1]

    @classmethod
    def empty(cls, n_units: int, n_leds: int, n_pds: int) -> "Assignment":
        return cls(f=np.zeros((n_units, n_pds), dtype=int), g=np.zeros((n_units, n_leds), dtype=int))

    @classmethod
    def from_pairs(cls, leds: np.ndarray, pds: np.ndarray, n_leds: int, n_pds: int) -> "Assignment":
        """
        Build from per-unit zero-based (led, pd) indices; -1 leaves a unit unassigned.
        """
        leds = np.asarray(leds, dtype=int)
        pds = np.asarray(pds, dtype=int)
        a = cls.empty(len(leds), n_leds, n_pds)
        rows = np.arange(len(leds))
        a.g[rows[leds >= 0], leds[leds >= 0]] = 1
        a.f[rows[pds >= 0], pds[pds >= 0]] = 1
        return a

    def pairs(self) -> tuple:
        """
        Zero-based (led, pd) index per unit, -1 where a row is empty.
        """
        leds = np.where(self.g.any(axis=1), self.g.argmax(axis=1), -1) if self.n_leds else np.full(self.n_units, -1)
        pds = np.where(self.f.any(axis=1), self.f.argmax(axis=1), -1) if self.n_pds else np.full(self.n_units, -1)
        return leds, pds


@dataclass(frozen=True)
class RelaxedLinkMatrix:
    """
    Relaxed V: entries in [0, 1], row sums at most 1.
    """
    v: np.ndarray  # N x (N_t N_r)
    n_pds: int

    @property
    def n_leds(self) -> int:
        return self.v.shape[1] // self.n_pds


def to_link_matrix(a: Assignment) -> np.ndarray:
    f = np.asarray(a.f, dtype=float)
    g = np.asarray(a.g, dtype=float)
    if f.shape[0] != g.shape[0]:
        raise DimensionError(f"f has {f.shape[0]} rows, g has {g.shape[0]}")
    # (N, N_t, N_r) flattens C-order to column n_r + n_t * N_r
    return (g[:, :, None] * f[:, None, :]).reshape(f.shape[0], g.shape[1] * f.shape[1])


def recover_assignment(link: RelaxedLinkMatrix) -> Assignment:
    """
    Round each row to its largest entry (smallest column on ties).

    Every unit is assigned, including all-zero rows.
    """
    v = np.asarray(link.v)
    n_units = v.shape[0]
    best = np.argmax(v, axis=1) if n_units else np.zeros(0, dtype=int)
    return Assignment.from_pairs(best // link.n_pds, best % link.n_pds, link.n_leds, link.n_pds)


def distance_greedy(scene: Scene) -> Assignment:
    units = scene.irs_positions()
    if not len(units):
        return Assignment.empty(0, scene.n_leds, scene.n_pds)
    d_pd = np.linalg.norm(units[:, None, :] - scene.pd_positions()[None, :, :], axis=2)
    d_led = np.linalg.norm(units[:, None, :] - scene.led_positions()[None, :, :], axis=2)
    # argmin returns the first index on ties
    return Assignment.from_pairs(d_led.argmin(axis=1), d_pd.argmin(axis=1), scene.n_leds, scene.n_pds)


def random_assignment(scene: Scene, seed: int) -> Assignment:
    """
    Uniform one-hot row per unit over the N_t N_r link columns.
    """
    rng = make_rng(seed)
    columns = rng.integers(0, scene.n_leds * scene.n_pds, size=scene.n_units)
    return Assignment.from_pairs(columns // scene.n_pds, columns % scene.n_pds, scene.n_leds, scene.n_pds)


def validate(a: Assignment) -> List[str]:
    violations = []
    f = np.asarray(a.f)
    g = np.asarray(a.g)
    if f.ndim != 2 or g.ndim != 2 or f.shape[0] != g.shape[0]:
        return [f"shape mismatch: f {f.shape}, g {g.shape}"]

    for name, matrix, rule in (
        ("f", f, "PD association row constraint"),
        ("g", g, "LED association row constraint"),
    ):
        for row in np.flatnonzero(~np.isin(matrix, (0, 1)).all(axis=1)):
            violations.append(f"row {row}: non-binary entry in {name}")
        for row in np.flatnonzero(matrix.sum(axis=1) > 1):
            violations.append(f"row {row}: {name} row sum exceeds 1 ({rule})")
    return violations
