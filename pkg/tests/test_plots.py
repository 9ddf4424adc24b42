# tests/test_plots.py
from __future__ import annotations

import logging

import pandas as pd
import pytest

from wellcast.estimators import EstimatorSpec, train_bundle
from wellcast.forecaster import InjectionSchedule, forecast_recursive
from wellcast.gridsearch import GridReport
from wellcast.services.plots_svg import (
    emit_forecast_plots,
    emit_grid_plots,
    emit_radar_plot,
    radar_chart_svg,
    radar_vertices,
)
from wellcast.windowing import WindowConfig, build_supervised, series_matrix


def test_radar_vertices_scale_with_values():
    verts = dict((n, (x, y)) for n, x, y in radar_vertices({"A": 0.5, "B": 1.0}, radius=100.0, cx=0.0, cy=0.0))
    ax, ay = verts["A"]
    bx, by = verts["B"]
    assert (ax**2 + ay**2) ** 0.5 == pytest.approx(50.0)
    assert (bx**2 + by**2) ** 0.5 == pytest.approx(100.0)
    assert (ax, ay) == pytest.approx((0.0, -50.0))


def test_radar_svg_has_one_polygon_per_estimator(tmp_path):
    normalized = {"ols": {"smape": 1.0, "mape": 0.5, "mae": 1.0}, "mlp": {"smape": 0.2, "mape": 1.0, "mae": 0.3}}
    assert radar_chart_svg(normalized).count("<polygon") == 2
    paths = emit_radar_plot(normalized, tmp_path)
    assert [p.name for p in paths] == ["radar.svg", "radar.csv"]
    assert len(pd.read_csv(tmp_path / "radar.csv")) == 6


def test_forecast_plots_one_chart_per_phase(tmp_path, linear_field):
    window = WindowConfig(6, 1, "full_field")
    history = linear_field.slice_steps(0, 110)
    bundle = train_bundle(EstimatorSpec("ols"), window, build_supervised(history, window))
    res = forecast_recursive(bundle, history, InjectionSchedule.from_dataset(linear_field, 110, 18), 18)
    keys, M = series_matrix(linear_field.slice_steps(110, 128), "full_field")
    res = res.with_actual(M[:, [keys.index(k) for k in res.keys]])

    paths = emit_forecast_plots(history, res, tmp_path, n_history=20)
    assert sorted(p.name for p in paths) == sorted(
        f"forecast_{ph}.{ext}" for ph in ("oil", "gas", "water") for ext in ("svg", "csv")
    )
    frame = pd.read_csv(tmp_path / "forecast_oil.csv")
    assert frame["kind"].value_counts().to_dict() == {"history": 20, "forecast": 18, "actual": 18}
    svg = (tmp_path / "forecast_oil.svg").read_text(encoding="utf-8")
    assert "<circle" in svg


def test_missing_artifacts_are_skipped_with_warning(tmp_path, caplog):
    caplog.set_level(logging.WARNING)
    assert emit_forecast_plots(None, None, tmp_path) == []
    assert emit_grid_plots(GridReport(()), tmp_path) == []
    assert emit_radar_plot({}, tmp_path) == []
    assert "grid report empty" in caplog.text
    assert list(tmp_path.iterdir()) == []
