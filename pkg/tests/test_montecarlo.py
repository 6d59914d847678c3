import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from back_end.vlc_core.montecarlo import (
    PamConfig,
    condition_number,
    pam_demodulate,
    pam_modulate,
    simulate_link,
    snr_db_to_noise_variance,
)
from back_end.vlc_core.objective import Design, SignalStats, mse
from back_end.vlc_core.shared.errors import NonnegativityViolationError


def _scalar_link(r=1.0):
    return Design(w=np.array([[1.0]]), q=np.array([[1.0]]), r=np.array([r]))


def test_binary_pam_levels():
    np.testing.assert_allclose(pam_modulate(np.array([0, 1]), PamConfig(order=2)), [-1.0, 1.0])


def test_four_pam_levels():
    cfg = PamConfig(order=4)
    np.testing.assert_allclose(np.sort(cfg.levels()), np.array([-3, -1, 1, 3]) / math.sqrt(5))
    assert cfg.bits_per_symbol == 2


def test_gray_neighbours_differ_in_one_bit():
    cfg = PamConfig(order=8)
    labels = [tuple(pam_demodulate(np.array([level]), cfg)) for level in cfg.levels()]
    for a, b in zip(labels, labels[1:]):
        assert sum(x != y for x, y in zip(a, b)) == 1


@given(st.sampled_from([2, 4, 8, 16]), st.lists(st.integers(0, 1), min_size=4, max_size=64))
def test_modulation_round_trip(order, bits):
    cfg = PamConfig(order=order)
    k = cfg.bits_per_symbol
    bits = np.array(bits[: len(bits) // k * k] or [0] * k)
    np.testing.assert_array_equal(pam_demodulate(pam_modulate(bits, cfg), cfg), bits)


def test_slicer_decisions():
    cfg = PamConfig(order=4)
    unit = cfg.unit
    near = pam_demodulate(np.array([0.99 * unit]), cfg)
    np.testing.assert_allclose(pam_modulate(near, cfg), [unit])
    # midpoint between -I and +I goes to the lower level
    tie = pam_demodulate(np.array([0.0]), cfg)
    np.testing.assert_allclose(pam_modulate(tie, cfg), [-unit])


@given(st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=1, max_size=32))
def test_slicer_is_nearest_level(values):
    cfg = PamConfig(order=4)
    levels = cfg.levels()
    soft = np.array(values)
    decided = pam_modulate(pam_demodulate(soft, cfg), cfg)
    distance = np.abs(soft[:, None] - levels[None, :])
    np.testing.assert_allclose(np.abs(soft - decided), distance.min(axis=1), atol=1e-12)


def test_modulate_rejects_partial_symbol():
    with pytest.raises(ValueError):
        pam_modulate(np.array([0, 1, 1]), PamConfig(order=4))
    with pytest.raises(ValueError):
        PamConfig(order=6)


def test_scalar_awgn_ber_matches_gaussian_tail():
    sigma = 0.43
    stats = SignalStats(sigma_x2=1.0, sigma_w2=sigma ** 2, n_streams=1, pam_order=2)
    trials = 400000
    estimate = simulate_link(_scalar_link(), np.array([[1.0]]), PamConfig(order=2), stats, trials, seed=1, partition_size=50000)
    expected = norm.sf(1.0 / sigma)
    assert abs(estimate.ber - expected) <= 3 * math.sqrt(expected * (1 - expected) / trials)
    assert estimate.ci95_halfwidth == pytest.approx(1.96 * math.sqrt(estimate.ber * (1 - estimate.ber) / trials))


def test_empirical_mse_matches_analytic():
    rng = np.random.default_rng(2)
    h = rng.uniform(0.5, 1.0, size=(2, 2))
    stats = SignalStats(sigma_x2=0.04, sigma_w2=0.01, n_streams=2, pam_order=4)
    design = Design(w=0.3 * np.eye(2), q=np.linalg.inv(h) / 0.3, r=np.ones(2))
    estimate = simulate_link(design, h, PamConfig.from_stats(stats), stats, trials=50000, seed=3)
    assert abs(estimate.empirical_mse - mse(h, design, stats)) <= 4 * estimate.mse_stderr


def test_partitioning_does_not_change_the_estimate():
    stats = SignalStats(sigma_x2=1.0, sigma_w2=0.25, n_streams=1, pam_order=4)
    args = (_scalar_link(2.0), np.array([[1.0]]), PamConfig(order=4), stats, 3000)
    serial = simulate_link(*args, seed=9, partition_size=1000, n_jobs=1)
    parallel = simulate_link(*args, seed=9, partition_size=1000, n_jobs=2)
    assert serial.bit_errors == parallel.bit_errors
    assert serial.empirical_mse == parallel.empirical_mse
    other = simulate_link(*args, seed=10, partition_size=1000)
    assert other.empirical_mse != serial.empirical_mse


def test_negative_intensity_is_detected():
    stats = SignalStats(sigma_x2=1.0, sigma_w2=0.01, n_streams=1, pam_order=2)
    with pytest.raises(NonnegativityViolationError) as info:
        simulate_link(_scalar_link(0.5), np.array([[1.0]]), PamConfig(order=2), stats, 100, seed=0)
    assert info.value.led == 0


def test_condition_number():
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([2.0, 1.0])) == pytest.approx(2.0)
    rng = np.random.default_rng(4)
    a = rng.normal(size=(4, 6))
    assert condition_number(a) == pytest.approx(np.linalg.cond(a))
    assert condition_number(np.zeros((2, 2))) == float("inf")


def test_snr_axis():
    assert snr_db_to_noise_variance(0.0) == pytest.approx(1e-13)
    assert snr_db_to_noise_variance(10.0, sigma_x2=2.0) == pytest.approx(2e-14)
