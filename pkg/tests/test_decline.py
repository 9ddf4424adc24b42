# tests/test_decline.py
from __future__ import annotations

from datetime import date

import numpy as np
import pytest

from wellcast.dataset import RateSeries
from wellcast.decline import ArpsParams, arps_rate, fit_arps, forecast_arps
from wellcast.errors import DataError


def _series(p: ArpsParams, n: int = 200) -> RateSeries:
    return RateSeries(date(2020, 1, 1), 1, arps_rate(p, np.arange(n, dtype=float)))


def test_hyperbolic_recovery():
    fit = fit_arps(_series(ArpsParams(1000.0, 0.05, 0.5)))
    assert fit.params.q_i == pytest.approx(1000.0, rel=0.01)
    assert fit.params.d_i == pytest.approx(0.05, rel=0.01)
    assert fit.params.b == pytest.approx(0.5, rel=0.01)
    assert not fit.warning


def test_exponential_recovery_prefers_b_zero():
    fit = fit_arps(_series(ArpsParams(800.0, 0.01, 0.0)))
    assert fit.params.b == 0.0
    assert fit.params.d_i == pytest.approx(0.01, rel=1e-4)


def test_exponential_branch_agrees_with_hyperbolic_form():
    t = np.linspace(0.0, 100.0, 101)
    exp = np.asarray(arps_rate(ArpsParams(1000.0, 0.01, 0.0), t))
    hyp = 1000.0 / np.power(1.0 + 1e-3 * 0.01 * t, 1.0 / 1e-3)
    np.testing.assert_allclose(exp, hyp, rtol=1e-3)
    np.testing.assert_allclose(arps_rate(ArpsParams(1000.0, 0.01, 1e-3), t), exp)


def test_harmonic_decline():
    assert arps_rate(ArpsParams(100.0, 0.1, 1.0), 10.0) == pytest.approx(50.0)


def test_flat_series_warns():
    fit = fit_arps(RateSeries(date(2020, 1, 1), 1, np.full(50, 300.0)))
    assert fit.warning
    assert fit.params.q_i == pytest.approx(300.0, rel=1e-6)


def test_fit_arps_input_checks():
    with pytest.raises(DataError):
        fit_arps(RateSeries(date(2020, 1, 1), 1, [5.0, 4.0]))
    with pytest.raises(DataError):
        fit_arps(RateSeries(date(2020, 1, 1), 1, [5.0, 0.0, 4.0]))


def test_params_validation():
    with pytest.raises(DataError):
        ArpsParams(0.0, 0.1, 0.5)
    with pytest.raises(DataError):
        ArpsParams(1.0, -0.1, 0.5)
    with pytest.raises(DataError):
        ArpsParams(1.0, 0.1, 1.5)


def test_forecast_arps_continues_from_start_step():
    p = ArpsParams(1000.0, 0.02, 0.3)
    fc = forecast_arps(p, 50, 5, date(2020, 1, 1), step_days=10)
    assert fc.start_date == date(2021, 5, 15)
    assert fc.step_days == 10
    np.testing.assert_allclose(fc.values, arps_rate(p, np.arange(50.0, 55.0)))
