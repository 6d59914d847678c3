import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from back_end.vlc_core.association import (
    Assignment,
    RelaxedLinkMatrix,
    distance_greedy,
    random_assignment,
    recover_assignment,
    to_link_matrix,
    validate,
)
from back_end.vlc_core.channel import ChannelSet, assemble_h
from back_end.vlc_core.objective import Design, SignalStats, mse
from back_end.vlc_core.scene import OpticalParams, Point3, Scene


def test_link_matrix_column_order():
    # unit 0 -> (LED 1, PD 0), unit 1 -> (LED 0, PD 1), with N_r = 2
    a = Assignment.from_pairs([1, 0], [0, 1], n_leds=3, n_pds=2)
    v = to_link_matrix(a)
    assert v.shape == (2, 6)
    assert v[0].tolist() == [0, 0, 1, 0, 0, 0]
    assert v[1].tolist() == [0, 1, 0, 0, 0, 0]


def test_partial_assignment_gives_zero_row():
    a = Assignment.from_pairs([2, -1], [1, 0], n_leds=3, n_pds=2)
    v = to_link_matrix(a)
    assert v[1].sum() == 0
    assert a.pairs()[0].tolist() == [2, -1]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2)), min_size=1, max_size=12))
def test_recover_inverts_link_matrix(pairs):
    leds, pds = map(np.array, zip(*pairs))
    a = Assignment.from_pairs(leds, pds, n_leds=4, n_pds=3)
    back = recover_assignment(RelaxedLinkMatrix(v=to_link_matrix(a), n_pds=3))
    np.testing.assert_array_equal(back.f, a.f)
    np.testing.assert_array_equal(back.g, a.g)


def test_recover_ties_and_zero_rows():
    v = np.array([
        [0.4, 0.4, 0.2, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.1, 0.2, 0.3, 0.4],
    ])
    a = recover_assignment(RelaxedLinkMatrix(v=v, n_pds=2))
    leds, pds = a.pairs()
    assert leds.tolist() == [0, 0, 1]
    assert pds.tolist() == [0, 0, 1]
    assert not validate(a)


def test_recover_empty():
    a = recover_assignment(RelaxedLinkMatrix(v=np.zeros((0, 4)), n_pds=2))
    assert a.n_units == 0


def test_distance_greedy_picks_nearest(reference_scene):
    a = distance_greedy(reference_scene)
    leds, pds = a.pairs()
    units = reference_scene.irs_positions()
    for n, unit in enumerate(units):
        d_led = np.linalg.norm(reference_scene.led_positions() - unit, axis=1)
        d_pd = np.linalg.norm(reference_scene.pd_positions() - unit, axis=1)
        assert leds[n] == int(np.argmin(d_led))
        assert pds[n] == int(np.argmin(d_pd))
    assert not validate(a)


def _crowd(n_units):
    units = tuple(Point3(0.0, 1.0 + 6.0 * k / n_units, 2.0) for k in range(n_units))
    return Scene(
        leds=(Point3(2.0, 2.0, 3.0), Point3(6.0, 2.0, 3.0)),
        pds=(Point3(2.0, 3.0, 1.0), Point3(2.2, 3.0, 1.0)),
        irs_units=units,
        optics=OpticalParams(),
        room_dims=(8.0, 8.0, 3.0),
    )


def test_random_assignment_reproducible():
    scene = _crowd(16)
    first = random_assignment(scene, seed=7)
    again = random_assignment(scene, seed=7)
    other = random_assignment(scene, seed=8)
    np.testing.assert_array_equal(first.f, again.f)
    np.testing.assert_array_equal(first.g, again.g)
    assert not (np.array_equal(first.f, other.f) and np.array_equal(first.g, other.g))
    assert np.all(to_link_matrix(first).sum(axis=1) == 1)


def test_random_assignment_is_uniform():
    n_units = 20000
    v = to_link_matrix(random_assignment(_crowd(n_units), seed=0))
    frequency = v.sum(axis=0) / n_units
    sigma = np.sqrt(0.25 * 0.75 / n_units)
    assert np.all(np.abs(frequency - 0.25) <= 3 * sigma)


def test_validate_reports_violations():
    a = Assignment(f=np.array([[1, 1], [0, 1]]), g=np.array([[1, 0], [0, 2]]))
    violations = validate(a)
    assert "row 0: f row sum exceeds 1 (PD association row constraint)" in violations
    assert "row 1: non-binary entry in g" in violations
    assert "row 1: g row sum exceeds 1 (LED association row constraint)" in violations
    assert validate(Assignment.empty(3, 2, 2)) == []


def _one_hot_or_zero_rows(n_links):
    return [np.zeros(n_links)] + [np.eye(n_links)[p] for p in range(n_links)]


def test_pair_assignments_span_one_hot_rows():
    n_leds, n_pds = 2, 2
    rows = set()
    for led, pd in itertools.product(range(-1, n_leds), range(-1, n_pds)):
        v = to_link_matrix(Assignment.from_pairs([led], [pd], n_leds, n_pds))
        rows.add(tuple(v[0]))
    assert rows == {tuple(r) for r in _one_hot_or_zero_rows(n_leds * n_pds)}


def _exhaustive_min_mse(chans, design, stats, unit_rows):
    """
    Smallest MSE over every combination of one row per unit, evaluated in a batch
    """
    n_r, n_t = chans.los.shape
    total = np.zeros((1, chans.n_links))
    for n in range(chans.n_units):
        contributions = chans.nlos[n][None, :] * unit_rows
        total = (total[:, None, :] + contributions[None, :, :]).reshape(-1, chans.n_links)
    hs = (chans.los.flatten(order="F") + total).reshape(-1, n_t, n_r).transpose(0, 2, 1)
    residual = design.q @ hs @ design.w - np.eye(stats.n_streams)
    values = stats.sigma_x2 * np.sum(residual ** 2, axis=(1, 2)) + stats.sigma_w2 * np.sum(design.q ** 2)
    best = int(np.argmin(values))

    # Decode the batch index back to rows and check it against the scalar MSE
    digits = np.unravel_index(best, (len(unit_rows),) * chans.n_units)
    v = np.array([unit_rows[d] for d in digits]).reshape(chans.n_units, chans.n_links)
    assert values[best] == pytest.approx(mse(assemble_h(chans, v), design, stats), rel=1e-12)
    return float(values[best])


@settings(max_examples=200)
@given(st.integers(min_value=0, max_value=2 ** 31 - 1), st.integers(min_value=1, max_value=6))
def test_pair_search_and_link_search_agree(seed, n_units):
    rng = np.random.default_rng(seed)
    chans = ChannelSet(los=rng.uniform(size=(2, 2)), nlos=rng.uniform(size=(n_units, 4)))
    stats = SignalStats(sigma_x2=1.0, sigma_w2=0.01, n_streams=2)
    design = Design(w=rng.normal(size=(2, 2)), q=rng.normal(size=(2, 2)), r=np.ones(2))

    link_rows = np.array(_one_hot_or_zero_rows(4))
    pair_rows = np.array([
        to_link_matrix(Assignment.from_pairs([led], [pd], 2, 2))[0]
        for led, pd in itertools.product(range(-1, 2), range(-1, 2))
    ])
    by_links = _exhaustive_min_mse(chans, design, stats, link_rows)
    by_pairs = _exhaustive_min_mse(chans, design, stats, pair_rows)
    assert by_pairs == pytest.approx(by_links, rel=1e-12)
