"""
Symbol-level link simulation: Gray-mapped PAM, DC-biased intensity
transmission, AWGN, linear detection and bit error counting.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from back_end.vlc_core.objective import Design, SignalStats, pam_normalizer
from back_end.vlc_core.shared.common import CONDITION_FLOOR, NONNEGATIVITY_TOL, SNR_AXIS_REFERENCE, make_rng
from back_end.vlc_core.shared.errors import NonnegativityViolationError


@dataclass(frozen=True)
class PamConfig:
    order: int = 4
    normalizer_mode: str = "exact"

    def __post_init__(self) -> None:
        if self.order < 2 or self.order & (self.order - 1):
            raise ValueError(f"PAM order must be a power of two >= 2, got {self.order}")

    @classmethod
    def from_stats(cls, stats: SignalStats) -> "PamConfig":
        return cls(order=stats.pam_order, normalizer_mode=stats.pam_normalizer)

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def unit(self) -> float:
        return pam_normalizer(self.order, self.normalizer_mode)

    def levels(self) -> np.ndarray:
        return (2 * np.arange(self.order) - (self.order - 1)) * self.unit


@dataclass(frozen=True)
class BerEstimate:
    ber: float
    trials: int
    bit_errors: int
    ci95_halfwidth: float
    empirical_mse: float = float("nan")
    mse_stderr: float = float("nan")
    seed: int = 0


def pam_modulate(bits: np.ndarray, cfg: PamConfig) -> np.ndarray:
    """
    Map groups of log2(M) bits (MSB first) to Gray-coded PAM amplitudes.
    """
    bits = np.asarray(bits, dtype=np.int64)
    k = cfg.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"Bit count {bits.size} is not a multiple of {k}")
    groups = bits.reshape(-1, k)
    labels = groups @ (1 << np.arange(k - 1, -1, -1))
    return cfg.levels()[_gray_to_index(labels)]


def pam_demodulate(soft: np.ndarray, cfg: PamConfig) -> np.ndarray:
    """
    Minimum-distance slicer (ties to the lower level) and Gray demapping.
    """
    soft = np.asarray(soft, dtype=float).ravel()
    position = (soft / cfg.unit + cfg.order - 1) / 2.0
    index = np.clip(np.ceil(position - 0.5), 0, cfg.order - 1).astype(np.int64)
    labels = index ^ (index >> 1)
    k = cfg.bits_per_symbol
    return ((labels[:, None] >> np.arange(k - 1, -1, -1)) & 1).ravel()


def simulate_link(
    design: Design,
    h: np.ndarray,
    cfg: PamConfig,
    stats: SignalStats,
    trials: int,
    seed: int,
    partition_size: int = 10000,
    n_jobs: int = 1,
) -> BerEstimate:
    """
    Estimate the BER of (W, Q, r) over channel H from independent trials.

    Trials are split into fixed-size partitions; partition i draws from the
    stream (seed, i), so the estimate does not depend on n_jobs.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    sizes = [min(partition_size, trials - start) for start in range(0, trials, partition_size)]
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_simulate_partition)(design, h, cfg, stats, size, seed, index)
        for index, size in enumerate(sizes)
    )
    bit_errors = sum(part[0] for part in parts)
    squared = np.concatenate([part[1] for part in parts])

    n_bits = trials * design.w.shape[1] * cfg.bits_per_symbol
    ber = bit_errors / n_bits
    estimate = BerEstimate(
        ber=ber,
        trials=trials,
        bit_errors=int(bit_errors),
        ci95_halfwidth=1.96 * math.sqrt(ber * (1 - ber) / n_bits),
        empirical_mse=float(squared.mean()),
        mse_stderr=float(squared.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan"),
        seed=seed,
    )
    logging.debug(f"Simulated {trials} trials: ber {ber:.3e}")
    return estimate


def _simulate_partition(design, h, cfg, stats, size, seed, index):
    rng = make_rng(seed, index)
    n_s = design.w.shape[1]
    bits = rng.integers(0, 2, size=(size, n_s * cfg.bits_per_symbol))
    x = pam_modulate(bits, cfg).reshape(size, n_s) * stats.sigma_x

    intensity = x @ design.w.T + design.r[None, :]
    worst = intensity.min(axis=0)
    if np.any(worst < -NONNEGATIVITY_TOL):
        led = int(np.argmin(worst))
        raise NonnegativityViolationError(led, float(worst[led]))

    noise = math.sqrt(stats.sigma_w2) * rng.standard_normal((size, h.shape[0]))
    received = intensity @ h.T + noise
    estimate = (received - (h @ design.r)[None, :]) @ design.q.T

    decided = pam_demodulate(estimate / stats.sigma_x, cfg).reshape(size, -1)
    errors = int(np.sum(decided != bits))
    return errors, np.sum((estimate - x) ** 2, axis=1)


def condition_number(h: np.ndarray) -> float:
    s = np.linalg.svd(h, compute_uv=False)
    if s[-1] < CONDITION_FLOOR:
        return float("inf")
    return float(s[0] / s[-1])


def snr_db_to_noise_variance(snr_db: float, sigma_x2: float = 1.0) -> float:
    """
    Noise variance for the SNR axis, SNR = 1e-13 sigma_x^2 / sigma_w^2.
    """
    return SNR_AXIS_REFERENCE * sigma_x2 / 10 ** (snr_db / 10)


def _gray_to_index(labels: np.ndarray) -> np.ndarray:
    index = labels.copy()
    shift = labels >> 1
    while np.any(shift):
        index ^= shift
        shift >>= 1
    return index
