# tests/test_dataset.py
from __future__ import annotations

from datetime import date

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from wellcast.dataset import (
    ProductionTest,
    RateSeries,
    apply_potential,
    estimate_potential,
    resample_mean,
    select_wells,
    smooth_injection,
    smooth_injectors,
    trim_rampup,
)
from wellcast.errors import DataError, EmptyResultError, InertWellError, PotentialError

from .conftest import START, make_dataset

RATES = st.floats(0.0, 5e3, allow_nan=False, allow_infinity=False)


def test_rate_series_is_read_only_and_validated():
    s = RateSeries(START, 1, [1.0, 2.0])
    with pytest.raises(ValueError):
        s.values[0] = 5.0
    with pytest.raises(DataError):
        RateSeries(START, 1, [1.0, -1.0])
    with pytest.raises(DataError):
        RateSeries(START, 1, [])
    with pytest.raises(DataError):
        RateSeries(START, 0, [1.0])


def test_field_dataset_rejects_off_grid_series():
    with pytest.raises(DataError):
        make_dataset({"P1": {"oil": [1, 2, 3]}, "P2": {"oil": [1, 2]}})


def test_field_totals_and_lookup():
    ds = make_dataset(
        {"P1": {"oil": [1, 2, 3]}, "P2": {"oil": [10, 20, 30], "water": [1, 1, 1]}},
        {"I1": {"water_inj": [5, 5, 5]}},
    )
    totals = ds.field_totals()
    np.testing.assert_array_equal(totals["oil"], [11, 22, 33])
    np.testing.assert_array_equal(totals["gas"], [0, 0, 0])
    np.testing.assert_array_equal(totals["water_inj"], [5, 5, 5])
    assert ds.well("P2").phases == ("oil", "water")
    assert [w.well_id for w in ds.injectors] == ["I1"]
    with pytest.raises(DataError):
        ds.well("X")


def test_resample_mean_drops_partial_block():
    ds = make_dataset({"P1": {"oil": [1, 3, 5, 7, 9, 11, 13]}})
    out = resample_mean(ds, 3)
    assert out.n_steps == 2
    assert out.step_days == 3
    np.testing.assert_allclose(out.well("P1").series["oil"].values, [3.0, 9.0])
    assert resample_mean(ds, 1) is ds


def test_resample_mean_period_longer_than_data():
    ds = make_dataset({"P1": {"oil": [1, 2]}})
    with pytest.raises(EmptyResultError):
        resample_mean(ds, 5)


@settings(max_examples=200, deadline=None)
@given(
    values=st.lists(st.floats(0.0, 1e4, allow_nan=False, allow_infinity=False), min_size=1, max_size=80),
    period=st.integers(1, 30),
)
def test_resample_mean_keeps_block_volumes(values, period):
    assume(period <= len(values))
    out = resample_mean(make_dataset({"P1": {"oil": values}}), period)
    daily = np.asarray(values)
    n_blocks = len(values) // period
    sums = daily[: n_blocks * period].reshape(n_blocks, period).sum(axis=1)
    assert out.n_steps == n_blocks
    np.testing.assert_allclose(out.well("P1").series["oil"].values * period, sums, rtol=1e-9, atol=1e-9)


def test_trim_rampup_starts_when_every_well_was_active():
    ds = make_dataset(
        {"P1": {"oil": [0, 5, 5, 5, 5]}},
        {"I1": {"water_inj": [0, 0, 0, 100, 100]}},
    )
    out = trim_rampup(ds)
    assert out.n_steps == 2
    assert out.start_date == date(2020, 1, 4)


def test_trim_rampup_override_and_inert_well():
    ds = make_dataset({"P1": {"oil": [1, 2, 3, 4]}}, {"I1": {"water_inj": [0, 0, 0, 0]}})
    with pytest.raises(InertWellError) as exc:
        trim_rampup(ds)
    assert exc.value.wells == ["I1"]
    out = trim_rampup(ds, override_start=date(2020, 1, 3))
    assert out.n_steps == 2
    with pytest.raises(EmptyResultError):
        trim_rampup(ds, override_start=date(2021, 1, 1))


def test_trim_rampup_rejects_well_that_stops_before_the_cut():
    ds = make_dataset({"P1": {"oil": [5, 0, 0, 0, 0]}}, {"I1": {"water_inj": [0, 0, 3, 3, 3]}})
    with pytest.raises(InertWellError) as exc:
        trim_rampup(ds)
    assert exc.value.wells == ["P1"]
    assert exc.value.since == date(2020, 1, 3)


def test_trim_rampup_moves_past_a_shut_in_well():
    # P1 ist am ersten gemeinsamen Datum geschlossen, erst ab Index 4 sind alle aktiv
    ds = make_dataset({"P1": {"oil": [5, 5, 0, 0, 5, 5]}}, {"I1": {"water_inj": [0, 0, 3, 3, 3, 3]}})
    out = trim_rampup(ds)
    assert out.start_date == date(2020, 1, 5)
    assert out.n_steps == 2
    assert trim_rampup(out) is out


@st.composite
def _activity_fields(draw):
    n_steps = draw(st.integers(1, 25))
    rate = st.sampled_from([0.0, 0.0, 1.0, 7.5])
    column = st.lists(rate, min_size=n_steps, max_size=n_steps)
    producers = {f"P{p}": {"oil": draw(column)} for p in range(draw(st.integers(1, 3)))}
    injectors = {f"I{j}": {"gas_inj": draw(column)} for j in range(draw(st.integers(0, 2)))}
    return make_dataset(producers, injectors)


@settings(max_examples=200, deadline=None)
@given(ds=_activity_fields())
def test_trim_rampup_is_idempotent(ds):
    try:
        once = trim_rampup(ds)
    except InertWellError:
        assume(False)
    twice = trim_rampup(once)
    assert twice is once
    assert all(w.active_mask()[0] for w in once.wells)


def test_select_wells_keeps_dataset_order():
    ds = make_dataset({"P1": {"oil": [1]}, "P2": {"oil": [2]}}, {"I1": {"water_inj": [3]}})
    assert select_wells(ds, ["I1", "P1"]).well_ids == ("P1", "I1")
    with pytest.raises(DataError):
        select_wells(ds, ["P9"])


def test_estimate_potential_interpolates_and_fills():
    daily = RateSeries(START, 1, np.zeros(10))
    tests = [
        ProductionTest("P1", date(2020, 1, 3), {"oil": 100.0}),
        ProductionTest("P1", date(2020, 1, 7), {"oil": 140.0}),
    ]
    pot = estimate_potential(daily, tests, "oil").values
    assert pot[0] == pot[1] == pot[2] == 100.0
    assert pot[4] == pytest.approx(120.0)
    assert pot[6] == 140.0
    assert pot[9] == 140.0


def test_estimate_potential_without_tests():
    with pytest.raises(PotentialError):
        estimate_potential(RateSeries(START, 1, [1.0]), [], "oil")


def test_apply_potential_reports_untested_producers():
    ds = make_dataset({"P1": {"oil": [1, 1, 1]}, "P2": {"oil": [2, 2, 2]}}, {"I1": {"water_inj": [1, 1, 1]}})
    tests = [ProductionTest("P1", date(2020, 1, 2), {"oil": 50.0})]
    out, untested = apply_potential(ds, tests)
    assert untested == ["P2"]
    np.testing.assert_array_equal(out.well("P1").series["oil"].values, [50, 50, 50])
    np.testing.assert_array_equal(out.well("P2").series["oil"].values, [2, 2, 2])


def test_smooth_injection_trailing_window():
    s = RateSeries(START, 1, [0, 0, 90, 0, 0])
    out = smooth_injection(s, 3).values
    np.testing.assert_allclose(out, [0, 0, 30, 30, 30])
    assert smooth_injection(s, 1) is s


@settings(max_examples=200, deadline=None)
@given(
    data=st.data(),
    values=st.lists(RATES, min_size=2, max_size=60),
    window=st.integers(1, 12),
)
def test_smooth_injection_ignores_future_values(data, values, window):
    t = data.draw(st.integers(0, len(values) - 2), label="t")
    n_future = len(values) - t - 1
    future = data.draw(st.lists(RATES, min_size=n_future, max_size=n_future), label="future")
    changed = values[: t + 1] + future
    a = smooth_injection(RateSeries(START, 1, values), window).values
    b = smooth_injection(RateSeries(START, 1, changed), window).values
    np.testing.assert_array_equal(a[: t + 1], b[: t + 1])


def test_smooth_injectors_leaves_producers_alone():
    ds = make_dataset({"P1": {"oil": [0, 9, 0]}}, {"I1": {"water_inj": [0, 9, 0]}})
    out = smooth_injectors(ds, 2)
    np.testing.assert_array_equal(out.well("P1").series["oil"].values, [0, 9, 0])
    np.testing.assert_allclose(out.well("I1").series["water_inj"].values, [0, 4.5, 4.5])
