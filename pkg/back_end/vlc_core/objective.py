"""
Demodulation MSE, SNR and emission-power constraint functions.

With R_x = sigma_x^2 I and R_w = sigma_w^2 I the MSE reduces to
sigma_x^2 ||QHW - I||_F^2 + sigma_w^2 ||Q||_F^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from back_end.vlc_core.shared.errors import DimensionError, InfeasibleBudgetError

PAM_NORMALIZERS = ("exact", "paper", "m2_plus_1")


@dataclass(frozen=True)
class SignalStats:
    sigma_x2: float = 1.0
    sigma_w2: float = 1e-14
    n_streams: int = 4
    pam_order: int = 4
    pam_normalizer: str = "exact"

    def __post_init__(self) -> None:
        if not self.sigma_x2 > 0:
            raise ValueError(f"sigma_x2 must be > 0, got {self.sigma_x2}")
        if not self.sigma_w2 >= 0:
            raise ValueError(f"sigma_w2 must be >= 0, got {self.sigma_w2}")
        if self.n_streams < 1:
            raise ValueError(f"n_streams must be >= 1, got {self.n_streams}")
        if self.pam_order < 2 or self.pam_order & (self.pam_order - 1):
            raise ValueError(f"pam_order must be a power of two >= 2, got {self.pam_order}")
        if self.pam_normalizer not in PAM_NORMALIZERS:
            raise ValueError(f"pam_normalizer must be one of {PAM_NORMALIZERS}")

    @property
    def sigma_x(self) -> float:
        return math.sqrt(self.sigma_x2)

    @property
    def amplitude_scale(self) -> float:
        """
        sigma_x * I * (M - 1): peak amplitude per unit l1 norm of a precoder row
        """
        return self.sigma_x * pam_normalizer(self.pam_order, self.pam_normalizer) * (self.pam_order - 1)

    def with_noise(self, sigma_w2: float) -> "SignalStats":
        return SignalStats(self.sigma_x2, sigma_w2, self.n_streams, self.pam_order, self.pam_normalizer)


@dataclass(frozen=True)
class PowerBudget:
    """
    p_total bounds sigma_x^2 ||W||^2 + r^T r. headroom defaults to the DC bias.
    """
    p_total: float
    dc_bias: np.ndarray
    headroom: np.ndarray = None

    def __post_init__(self) -> None:
        r = np.atleast_1d(np.asarray(self.dc_bias, dtype=float))
        object.__setattr__(self, "dc_bias", r)
        d = r.copy() if self.headroom is None else np.atleast_1d(np.asarray(self.headroom, dtype=float))
        object.__setattr__(self, "headroom", d)
        if d.shape != r.shape:
            raise DimensionError(f"headroom {d.shape} does not match dc_bias {r.shape}")
        if np.any(r < 0) or np.any(d < 0):
            raise ValueError("dc_bias and headroom must be nonnegative")

    @classmethod
    def uniform(cls, p_total: float, dc_bias: float, n_leds: int) -> "PowerBudget":
        return cls(p_total=p_total, dc_bias=np.full(n_leds, float(dc_bias)))

    @property
    def bias_power(self) -> float:
        return float(self.dc_bias @ self.dc_bias)

    def signal_power(self) -> float:
        """
        Power left for the signal, p_total - r^T r.
        """
        slack = self.p_total - self.bias_power
        if slack < -1e-12 * max(1.0, self.p_total):
            raise InfeasibleBudgetError(
                f"p_total {self.p_total} is below the DC bias power {self.bias_power}"
            )
        return max(slack, 0.0)


@dataclass(frozen=True)
class Design:
    w: np.ndarray  # N_t x N_s
    q: np.ndarray  # N_s x N_r
    r: np.ndarray  # N_t


def pam_normalizer(order: int, mode: str = "exact") -> float:
    """
    Amplitude unit I of the constellation {+-I, +-3I, ..., +-(M-1)I}.

    "exact" gives unit mean power; "paper" (alias "m2_plus_1") keeps the
    alternative M^2 + 1 form.
    """
    if mode == "exact":
        return math.sqrt(3.0 / (order ** 2 - 1))
    if mode in ("paper", "m2_plus_1"):
        return math.sqrt(3.0 / (order ** 2 + 1))
    raise ValueError(f"Unknown PAM normalizer mode '{mode}'")


def mse(h: np.ndarray, design: Design, stats: SignalStats) -> float:
    _check_shapes(h, design)
    error = design.q @ h @ design.w - np.eye(design.q.shape[0])
    return float(
        stats.sigma_x2 * np.sum(error ** 2) + stats.sigma_w2 * np.sum(design.q ** 2)
    )


def normalized_mse(h: np.ndarray, design: Design, stats: SignalStats) -> float:
    return mse(h, design, stats) / (design.w.shape[1] * stats.sigma_x2)


def receive_snr(h: np.ndarray, w: np.ndarray, stats: SignalStats) -> float:
    """
    sigma_x^2 ||HW||_F^2 / (sigma_w^2 N_r)
    """
    return float(stats.sigma_x2 * np.sum((h @ w) ** 2) / (stats.sigma_w2 * h.shape[0]))


def total_power(design: Design, stats: SignalStats) -> float:
    return float(stats.sigma_x2 * np.sum(design.w ** 2) + design.r @ design.r)


def led_headroom_usage(design: Design, stats: SignalStats) -> np.ndarray:
    """
    Worst-case downward excursion per LED, sigma_x * I * (M-1) * ||w_nt||_1.
    """
    return stats.amplitude_scale * np.abs(design.w).sum(axis=1)


def power_residual(design: Design, stats: SignalStats, budget: PowerBudget) -> float:
    return max(0.0, total_power(design, stats) - budget.p_total)


def headroom_residual(design: Design, stats: SignalStats, budget: PowerBudget) -> float:
    excess = led_headroom_usage(design, stats) - budget.headroom
    return float(max(0.0, excess.max(initial=0.0)))


def _check_shapes(h: np.ndarray, design: Design) -> None:
    n_r, n_t = h.shape
    if design.w.shape[0] != n_t or design.q.shape[1] != n_r or design.q.shape[0] != design.w.shape[1]:
        raise DimensionError(
            f"Incompatible shapes: H {h.shape}, W {design.w.shape}, Q {design.q.shape}"
        )
