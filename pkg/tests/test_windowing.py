# tests/test_windowing.py
from __future__ import annotations

from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wellcast.errors import EmptyResultError, InsufficientHistoryError, SchemaError
from wellcast.windowing import (
    SplitSpec,
    WindowConfig,
    build_supervised,
    chronological_split,
    denormalize,
    fit_normalizer,
    normalize,
    series_keys,
    series_matrix,
    supervised_frame,
)

from .conftest import START, make_dataset


def test_lag_row_is_reproduced_exactly(ramp_dataset):
    ss = build_supervised(ramp_dataset, WindowConfig(3, 3, "per_well"))
    # Ursprung t=4 (1-basiert) ist die erste vollständige Zeile
    np.testing.assert_array_equal(ss.X[0], [10, 20, 30, 130, 140, 150, 250, 260, 270])
    np.testing.assert_array_equal(ss.Y[0], [40, 50, 60, 160, 170, 180, 280, 290, 300])
    assert ss.row_origin_dates[0] == date(2020, 1, 4)


def test_row_count_is_complete_windows_only(ramp_dataset):
    ss = build_supervised(ramp_dataset, WindowConfig(3, 3, "per_well"))
    assert ss.n_rows == 5
    assert ss.row_origin_dates[-1] == date(2020, 1, 8)


def test_column_labels_and_order(ramp_dataset):
    ss = build_supervised(ramp_dataset, WindowConfig(2, 1, "per_well"))
    labels = list(supervised_frame(ss).columns)
    assert labels[:4] == ["origin_date", "P1_oil_t-2", "P1_oil_t-1", "P2_oil_t-2"]
    assert labels[-3:] == ["P1_oil_t", "P2_oil_t", "P3_oil_t"]


def _field_layout(n_prod: int, n_inj: int, n_steps: int):
    producers = {f"P{p}": {ph: np.full(n_steps, 1.0 + p) for ph in ("oil", "gas", "water")} for p in range(n_prod)}
    injectors = {f"I{j}": {"water_inj": np.full(n_steps, 2.0 + j)} for j in range(n_inj)}
    return make_dataset(producers, injectors)


def test_dimension_law_for_six_producers_and_seven_injectors():
    ds = _field_layout(6, 7, 20)
    ss = build_supervised(ds, WindowConfig(15, 1, "per_well"))
    assert len(ss.x_keys) == 375
    assert len(ss.y_keys) == 18


@settings(max_examples=100, deadline=None)
@given(
    i=st.integers(1, 6),
    k=st.integers(1, 4),
    n_prod=st.integers(1, 4),
    n_inj=st.integers(0, 4),
)
def test_dimension_law_property(i, k, n_prod, n_inj):
    ds = _field_layout(n_prod, n_inj, i + k + 3)
    ss = build_supervised(ds, WindowConfig(i, k, "per_well"))
    assert len(ss.x_keys) == i * (3 * n_prod + n_inj)
    assert len(ss.y_keys) == k * 3 * n_prod
    assert ss.n_rows == 4


@st.composite
def _random_fields(draw, min_steps: int = 2):
    n_steps = draw(st.integers(min_steps, 30))
    column = st.lists(st.integers(0, 1000).map(float), min_size=n_steps, max_size=n_steps)
    producers = {
        f"P{p}": {ph: draw(column) for ph in draw(st.sampled_from([("oil",), ("oil", "water"), ("oil", "gas", "water")]))}
        for p in range(draw(st.integers(1, 3)))
    }
    injectors = {f"I{j}": {"water_inj": draw(column)} for j in range(draw(st.integers(0, 2)))}
    return make_dataset(producers, injectors)


@settings(max_examples=100, deadline=None)
@given(data=st.data(), ds=_random_fields(), scope=st.sampled_from(["per_well", "full_field"]))
def test_rows_hold_the_lagged_series_values(data, ds, scope):
    i = data.draw(st.integers(1, ds.n_steps - 1), label="i")
    k = data.draw(st.integers(1, ds.n_steps - i), label="k")
    ss = build_supervised(ds, WindowConfig(i, k, scope))
    keys, M = series_matrix(ds, scope)
    outputs = [s for s, key in enumerate(keys) if key.is_output]
    assert ss.n_rows == ds.n_steps - i - k + 1
    for r in range(ss.n_rows):
        origin = i + r
        assert ss.row_origin_dates[r] == ds.date_at(origin)
        for s in range(len(keys)):
            for j in range(i):
                assert ss.X[r, s * i + j] == M[origin - i + j, s]
        for q, s in enumerate(outputs):
            for m in range(k):
                assert ss.Y[r, q * k + m] == M[origin + m, s]


@settings(max_examples=100, deadline=None)
@given(data=st.data(), ds=_random_fields(min_steps=3), scope=st.sampled_from(["per_well", "full_field"]))
def test_rows_ignore_values_after_their_last_output(data, ds, scope):
    i = data.draw(st.integers(1, ds.n_steps - 2), label="i")
    k = data.draw(st.integers(1, ds.n_steps - i - 1), label="k")
    t = data.draw(st.integers(i + k - 1, ds.n_steps - 2), label="t")
    bump = data.draw(st.floats(1.0, 500.0), label="bump")
    producers = {
        w.well_id: {ph: np.concatenate([s.values[: t + 1], s.values[t + 1 :] + bump]) for ph, s in w.series.items()}
        for w in ds.producers
    }
    injectors = {
        w.well_id: {ph: np.concatenate([s.values[: t + 1], s.values[t + 1 :] + bump]) for ph, s in w.series.items()}
        for w in ds.injectors
    }
    changed = make_dataset(producers, injectors)
    a = build_supervised(ds, WindowConfig(i, k, scope))
    b = build_supervised(changed, WindowConfig(i, k, scope))
    # Zeilen mit Ursprung o lesen höchstens bis o + k - 1
    n_fixed = t - (i + k - 1) + 1
    np.testing.assert_array_equal(a.X[:n_fixed], b.X[:n_fixed])
    np.testing.assert_array_equal(a.Y[:n_fixed], b.Y[:n_fixed])
    assert not np.array_equal(a.Y, b.Y)


def test_full_field_scope_uses_field_totals(ramp_dataset):
    keys = series_keys(ramp_dataset, "full_field")
    assert [k.phase for k in keys] == ["oil", "gas", "water", "water_inj", "gas_inj"]
    ss = build_supervised(ramp_dataset, WindowConfig(1, 1, "full_field"))
    assert ss.X[0, 0] == 10 + 130 + 250
    assert ss.Y.shape[1] == 3


def test_insufficient_history(ramp_dataset):
    with pytest.raises(InsufficientHistoryError) as exc:
        build_supervised(ramp_dataset, WindowConfig(8, 3, "per_well"))
    assert exc.value.required == 11
    assert exc.value.available == 10


def _rows(n: int):
    ds = make_dataset({"P1": {"oil": np.arange(1.0, n + 2)}})
    return build_supervised(ds, WindowConfig(1, 1, "per_well"))


def test_chronological_split_by_fraction():
    train, val, test = chronological_split(_rows(10), SplitSpec(0.6, 0.2, 0.2))
    assert (train.n_rows, val.n_rows, test.n_rows) == (6, 2, 2)
    assert max(train.row_origin_dates) < min(val.row_origin_dates) < min(test.row_origin_dates)


def test_chronological_split_degenerate_and_dates():
    train, val, test = chronological_split(_rows(10), SplitSpec(1.0, 0.0, 0.0))
    assert (train.n_rows, val.n_rows, test.n_rows) == (10, 0, 0)

    spec = SplitSpec(val_start=date(2020, 1, 5), test_start=date(2020, 1, 8))
    train, val, test = chronological_split(_rows(10), spec)
    assert all(d < date(2020, 1, 5) for d in train.row_origin_dates)
    assert all(date(2020, 1, 5) <= d < date(2020, 1, 8) for d in val.row_origin_dates)
    assert all(d >= date(2020, 1, 8) for d in test.row_origin_dates)


def test_chronological_split_empty_train():
    spec = SplitSpec(val_start=START, test_start=START)
    with pytest.raises(EmptyResultError):
        chronological_split(_rows(5), spec)


def test_normalizer_uses_training_rows_only():
    train, _val, test = chronological_split(_rows(10), SplitSpec(0.6, 0.2, 0.2))
    nz = fit_normalizer(train)
    assert nz.x_mean[0] == pytest.approx(train.X[:, 0].mean())
    normed = normalize(train, nz)
    assert normed.X.mean() == pytest.approx(0.0, abs=1e-12)
    assert normed.X.std() == pytest.approx(1.0)
    back = denormalize(normalize(test, nz), nz)
    np.testing.assert_allclose(back.X, test.X)


def test_constant_column_gets_unit_scale():
    ds = make_dataset({"P1": {"oil": [5.0] * 6}})
    nz = fit_normalizer(build_supervised(ds, WindowConfig(2, 1, "per_well")))
    assert nz.x_std[0] == 1.0


def test_normalize_rejects_foreign_keys(ramp_dataset):
    a = build_supervised(ramp_dataset, WindowConfig(2, 1, "per_well"))
    b = build_supervised(ramp_dataset, WindowConfig(3, 1, "per_well"))
    with pytest.raises(SchemaError):
        normalize(b, fit_normalizer(a))
