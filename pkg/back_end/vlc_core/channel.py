"""
Single-link optical gains and MIMO channel assembly.

Column p of the NLoS gain bank (and entry p of vec(H), column-major) is
p = n_r + n_t * N_r with zero-based indices.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from back_end.vlc_core.scene import OpticalParams, Point3, Scene, los_geometry, nlos_geometry
from back_end.vlc_core.shared.errors import DimensionError, GeometryError


@dataclass(frozen=True)
class ChannelSet:
    """
    los: N_r x N_t LoS gains. nlos: N x (N_t N_r) gain bank of IRS paths.
    """
    los: np.ndarray
    nlos: np.ndarray

    def __post_init__(self) -> None:
        if self.los.ndim != 2 or self.nlos.ndim != 2:
            raise DimensionError("ChannelSet matrices must be two-dimensional")
        n_r, n_t = self.los.shape
        if self.nlos.shape[1] != n_t * n_r:
            raise DimensionError(
                f"nlos has {self.nlos.shape[1]} columns, expected {n_t * n_r}"
            )

    @property
    def n_pds(self) -> int:
        return self.los.shape[0]

    @property
    def n_leds(self) -> int:
        return self.los.shape[1]

    @property
    def n_units(self) -> int:
        return self.nlos.shape[0]

    @property
    def n_links(self) -> int:
        return self.nlos.shape[1]

    def without_irs(self) -> "ChannelSet":
        return ChannelSet(los=self.los, nlos=np.zeros((0, self.n_links)))


def concentrator_gain(phi: float, q: float, phi0: float) -> float:
    if 0.0 <= phi <= phi0:
        return q ** 2 / math.sin(phi0) ** 2
    return 0.0


def los_gain(tx: Point3, rx: Point3, optics: OpticalParams) -> float:
    """
    Lambertian LoS DC gain. Zero outside the receiver field of view.
    """
    geo = los_geometry(tx, rx)
    f = concentrator_gain(geo.rx_angle, optics.refractive_index, optics.fov_semi_angle)
    if f == 0.0:
        return 0.0
    cos_tx = math.cos(geo.tx_angle)
    if cos_tx <= 0.0:
        return 0.0
    cos_rx = max(math.cos(geo.rx_angle), 0.0)
    m = optics.lambertian_index
    return (
        optics.pd_area * (m + 1) * optics.filter_gain / (2 * math.pi * geo.distance ** 2)
        * cos_tx ** m * cos_rx * f
    )


def nlos_gain(tx: Point3, unit: Point3, rx: Point3, optics: OpticalParams) -> float:
    """
    Specular IRS path gain, inversely proportional to the squared distance sum.
    """
    leg1, leg2 = nlos_geometry(tx, unit, rx)
    f = concentrator_gain(leg2.rx_angle, optics.refractive_index, optics.fov_semi_angle)
    if f == 0.0:
        return 0.0
    cos_tx = math.cos(leg1.tx_angle)
    if cos_tx <= 0.0:
        return 0.0
    cos_rx = max(math.cos(leg2.rx_angle), 0.0)
    m = optics.lambertian_index
    return (
        optics.irs_reflectivity * optics.pd_area * (m + 1) * cos_tx ** m
        / (2 * math.pi * (leg1.distance + leg2.distance) ** 2)
        * optics.filter_gain * cos_rx * f
    )


def build_channels(scene: Scene) -> ChannelSet:
    """
    Evaluate every LoS gain and every (LED, unit, PD) NLoS gain of the scene.
    """
    optics = scene.optics
    leds = scene.led_positions()
    pds = scene.pd_positions()
    units = scene.irs_positions()
    n_t, n_r, n = len(leds), len(pds), len(units)

    # LoS: delta[n_r, n_t, :] = led - pd
    delta = leds[None, :, :] - pds[:, None, :]
    distance = np.linalg.norm(delta, axis=2)
    if np.any(distance == 0.0):
        raise GeometryError("An LED coincides with a PD")
    cos_angle = np.clip(delta[:, :, 2] / distance, -1.0, 1.0)
    los = _lambertian(optics, distance, cos_angle, cos_angle)

    nlos = np.zeros((n, n_t * n_r))
    if n:
        # first[n, n_t, :] = led - unit ; second[n, n_r, :] = unit - pd
        first = leds[None, :, :] - units[:, None, :]
        second = units[:, None, :] - pds[None, :, :]
        d1 = np.linalg.norm(first, axis=2)
        d2 = np.linalg.norm(second, axis=2)
        if np.any(d1 == 0.0) or np.any(d2 == 0.0):
            raise GeometryError("An IRS unit coincides with an LED or a PD")
        cos_tx = np.clip(first[:, :, 2] / d1, -1.0, 1.0)
        cos_rx = np.clip(second[:, :, 2] / d2, -1.0, 1.0)
        # bank[n, n_t, n_r] flattens C-order to column n_r + n_t * N_r
        total = d1[:, :, None] + d2[:, None, :]
        bank = optics.irs_reflectivity * _lambertian(
            optics, total, cos_tx[:, :, None], cos_rx[:, None, :]
        )
        nlos = bank.reshape(n, n_t * n_r)

    logging.debug(f"Built channels: los {los.shape}, nlos {nlos.shape}")
    return ChannelSet(los=los, nlos=nlos)


def assemble_h(chans: ChannelSet, v: np.ndarray) -> np.ndarray:
    """
    H = H1 + H2 where vec(H2)[p] = <nlos[:, p], v[:, p]>.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != chans.nlos.shape:
        raise DimensionError(f"Link matrix shape {v.shape} does not match {chans.nlos.shape}")
    h2 = np.einsum("np,np->p", chans.nlos, v)
    return chans.los + h2.reshape(chans.los.shape, order="F")


def _lambertian(optics: OpticalParams, distance, cos_tx, cos_rx) -> np.ndarray:
    # Gain without reflectivity; zero beyond the FoV and for upward links
    phi = np.arccos(cos_rx)
    in_fov = phi <= optics.fov_semi_angle
    f = optics.refractive_index ** 2 / math.sin(optics.fov_semi_angle) ** 2
    m = optics.lambertian_index
    gain = (
        optics.pd_area * (m + 1) * optics.filter_gain / (2 * math.pi * distance ** 2)
        * np.maximum(cos_tx, 0.0) ** m * np.maximum(cos_rx, 0.0) * f
    )
    return np.where(in_fov & (cos_tx > 0.0), gain, 0.0)
