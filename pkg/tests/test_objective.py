import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from back_end.vlc_core.objective import (
    Design,
    PowerBudget,
    SignalStats,
    headroom_residual,
    led_headroom_usage,
    mse,
    normalized_mse,
    pam_normalizer,
    power_residual,
    receive_snr,
    total_power,
)
from back_end.vlc_core.shared.errors import DimensionError, InfeasibleBudgetError


def test_mse_with_zero_detector():
    stats = SignalStats(sigma_x2=2.0, sigma_w2=0.1, n_streams=3)
    design = Design(w=np.ones((4, 3)), q=np.zeros((3, 2)), r=np.ones(4))
    assert mse(np.ones((2, 4)), design, stats) == pytest.approx(6.0)
    assert normalized_mse(np.ones((2, 4)), design, stats) == pytest.approx(1.0)


def test_mse_perfect_inversion_noiseless():
    rng = np.random.default_rng(0)
    h = rng.uniform(size=(3, 3))
    stats = SignalStats(sigma_w2=0.0, n_streams=3)
    design = Design(w=np.linalg.inv(h), q=np.eye(3), r=np.zeros(3))
    assert mse(h, design, stats) == pytest.approx(0.0, abs=1e-20)


def test_mse_matches_sample_average():
    rng = np.random.default_rng(1)
    stats = SignalStats(sigma_x2=1.5, sigma_w2=0.2, n_streams=2)
    h, w, q = rng.normal(size=(2, 2)), rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    design = Design(w=w, q=q, r=np.zeros(2))

    n = 200000
    x = math.sqrt(stats.sigma_x2) * rng.standard_normal((n, 2))
    noise = math.sqrt(stats.sigma_w2) * rng.standard_normal((n, 2))
    error = np.sum(((x @ w.T @ h.T + noise) @ q.T - x) ** 2, axis=1)
    stderr = error.std(ddof=1) / math.sqrt(n)
    assert abs(error.mean() - mse(h, design, stats)) <= 4 * stderr


def test_mse_shape_mismatch():
    with pytest.raises(DimensionError):
        mse(np.ones((2, 3)), Design(w=np.ones((2, 2)), q=np.ones((2, 2)), r=np.ones(3)), SignalStats(n_streams=2))


def test_pam_normalizer():
    assert pam_normalizer(4) == pytest.approx(1 / math.sqrt(5))
    assert pam_normalizer(2) == pytest.approx(1.0)
    assert pam_normalizer(4, "m2_plus_1") == pytest.approx(math.sqrt(3 / 17))
    assert pam_normalizer(4, "paper") == pam_normalizer(4, "m2_plus_1")
    assert SignalStats(pam_normalizer="paper").amplitude_scale == pytest.approx(3 * math.sqrt(3 / 17))
    with pytest.raises(ValueError):
        pam_normalizer(4, "other")


@pytest.mark.parametrize("order", [2, 4, 8, 16])
def test_exact_normalizer_has_unit_power(order):
    unit = pam_normalizer(order)
    levels = (2 * np.arange(order) - (order - 1)) * unit
    assert np.mean(levels ** 2) == pytest.approx(1.0, abs=1e-12)


def test_total_power_of_bias_only():
    design = Design(w=np.zeros((16, 4)), q=np.zeros((4, 4)), r=np.ones(16))
    assert total_power(design, SignalStats()) == pytest.approx(16.0)


def test_headroom_usage_single_row():
    stats = SignalStats(n_streams=2, pam_order=2)
    design = Design(w=np.array([[0.3, -0.4]]), q=np.zeros((2, 1)), r=np.ones(1))
    np.testing.assert_allclose(led_headroom_usage(design, stats), [0.7])
    assert led_headroom_usage(Design(np.zeros((3, 2)), np.zeros((2, 1)), np.ones(3)), stats).tolist() == [0, 0, 0]


@given(
    st.integers(min_value=0, max_value=2 ** 31 - 1),
    st.sampled_from([2, 4]),
    st.integers(min_value=1, max_value=3),
)
def test_headroom_matches_worst_case_intensity(seed, order, n_streams):
    rng = np.random.default_rng(seed)
    stats = SignalStats(sigma_x2=rng.uniform(0.5, 2.0), n_streams=n_streams, pam_order=order)
    w = rng.normal(size=(3, n_streams))
    r = rng.uniform(0.0, 3.0, size=3)
    design = Design(w=w, q=np.zeros((n_streams, 1)), r=r)

    unit = pam_normalizer(order)
    levels = (2 * np.arange(order) - (order - 1)) * unit * stats.sigma_x
    worst = np.min([w @ np.array(x) + r for x in itertools.product(levels, repeat=n_streams)], axis=0)
    usage = led_headroom_usage(design, stats)
    for led in range(3):
        if not math.isclose(usage[led], r[led], rel_tol=1e-9):
            assert (worst[led] >= 0) == (usage[led] <= r[led])
    np.testing.assert_allclose(worst, r - usage, atol=1e-12)


def test_residuals():
    stats = SignalStats(n_streams=1, pam_order=2)
    budget = PowerBudget(p_total=2.0, dc_bias=np.array([1.0]), headroom=np.array([0.5]))
    design = Design(w=np.array([[2.0]]), q=np.zeros((1, 1)), r=np.array([1.0]))
    assert power_residual(design, stats, budget) == pytest.approx(3.0)
    assert headroom_residual(design, stats, budget) == pytest.approx(1.5)
    feasible = Design(w=np.array([[0.5]]), q=np.zeros((1, 1)), r=np.array([1.0]))
    assert power_residual(feasible, stats, budget) == 0.0
    assert headroom_residual(feasible, stats, budget) == 0.0


def test_budget_signal_power():
    budget = PowerBudget.uniform(p_total=160.0, dc_bias=1.0, n_leds=16)
    assert budget.signal_power() == pytest.approx(144.0)
    np.testing.assert_array_equal(budget.headroom, np.ones(16))
    with pytest.raises(InfeasibleBudgetError):
        PowerBudget.uniform(p_total=10.0, dc_bias=1.0, n_leds=16).signal_power()


def test_budget_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        PowerBudget(p_total=1.0, dc_bias=np.ones(3), headroom=np.ones(2))
    with pytest.raises(ValueError):
        PowerBudget(p_total=1.0, dc_bias=-np.ones(2))


def test_receive_snr():
    stats = SignalStats(sigma_x2=2.0, sigma_w2=0.5, n_streams=1)
    assert receive_snr(np.eye(2), np.array([[1.0], [1.0]]), stats) == pytest.approx(2.0 * 2.0 / (0.5 * 2))


@pytest.mark.parametrize("kwargs", [
    {"sigma_x2": 0.0},
    {"sigma_w2": -1.0},
    {"n_streams": 0},
    {"pam_order": 3},
    {"pam_normalizer": "other"},
])
def test_signal_stats_validated(kwargs):
    with pytest.raises(ValueError):
        SignalStats(**kwargs)


@given(
    st.integers(min_value=0, max_value=2 ** 31 - 1),
    st.floats(min_value=0.0, max_value=1.0),
)
def test_mse_is_convex_in_channel(seed, t):
    rng = np.random.default_rng(seed)
    stats = SignalStats(sigma_x2=1.5, sigma_w2=0.05, n_streams=2)
    design = Design(w=rng.normal(size=(4, 2)), q=rng.normal(size=(2, 3)), r=np.ones(4))
    h1, h2 = rng.uniform(size=(3, 4)), rng.uniform(size=(3, 4))
    mixed = mse(t * h1 + (1 - t) * h2, design, stats)
    chord = t * mse(h1, design, stats) + (1 - t) * mse(h2, design, stats)
    assert mixed <= chord + 1e-12 * max(1.0, chord)


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_trace_form_matches_kronecker_quadratic(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(3, 4))
    c = rng.normal(size=(3, 3))
    d = rng.normal(size=(4, 4))
    vec_m = m.flatten(order="F")
    lhs = np.trace(m.T @ c @ m @ d)
    rhs = vec_m @ np.kron(d.T, c) @ vec_m
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@given(st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_mse_is_quadratic_form_in_vec_h(seed):
    # sigma_x^2 ||QHW||^2 = vec(H)^T kron(sigma_x^2 W W^T, Q^T Q) vec(H)
    rng = np.random.default_rng(seed)
    stats = SignalStats(sigma_x2=0.7, sigma_w2=0.0, n_streams=2)
    w, q, h = rng.normal(size=(4, 2)), rng.normal(size=(2, 3)), rng.normal(size=(3, 4))
    vec_h = h.flatten(order="F")
    u = np.kron(stats.sigma_x2 * w @ w.T, q.T @ q)
    linear = 2 * stats.sigma_x2 * (q.T @ w.T).flatten(order="F")
    expected = vec_h @ u @ vec_h - linear @ vec_h + stats.sigma_x2 * 2
    assert mse(h, Design(w, q, np.zeros(4)), stats) == pytest.approx(expected, rel=1e-9, abs=1e-9)
