# tests/test_gridsearch.py
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from wellcast.dataset import resample_mean, trim_rampup
from wellcast.estimators import EstimatorSpec
from wellcast.forecaster import RollingConfig, run_rolling_evaluation
from wellcast.gridsearch import GridReport, GridSpec, TrialConfig, TrialResult, best_by_metric, grid_search, trial_seed
from wellcast.synth import default_synth_spec, generate_field
from wellcast.windowing import WindowConfig

SMALL = dict(min_train_days=(365,), retrain_days=(180,), horizon_days=90)


@pytest.fixture(scope="module")
def daily_field():
    return generate_field(default_synth_spec(seed=5, n_steps=1000, noise=0.01))


def _trial(smape: float, look_back: int) -> TrialResult:
    cfg = TrialConfig(10, look_back, "ols", 0.2, 20, "identity", 1095, "incremental", 365)
    metrics = {"smape": smape, "mape": smape, "rmse": 1.0, "r2": 1.0 - smape, "mae": 1.0, "mse": 1.0}
    return TrialResult(cfg, trial_seed(42, cfg.key), metrics, 3)


def test_cardinality():
    grid = GridSpec(sampling_days=(10, 20), look_back=(5, 10), estimator=("ols",))
    assert grid.n_trials == 4
    assert len({t.key for t in grid.trials()}) == 4


def test_trial_seed_is_stable_and_key_dependent():
    assert trial_seed(42, "a") == trial_seed(42, "a")
    assert trial_seed(42, "a") != trial_seed(42, "b")
    assert trial_seed(42, "a") != trial_seed(43, "a")
    assert 0 <= trial_seed(42, "a") < 2**63


def test_best_by_metric_picks_minimum_error_and_maximum_r2():
    trials = [_trial(0.3, 5), _trial(0.1, 10), _trial(0.2, 15)]
    assert best_by_metric(trials, "smape").config.look_back == 10
    assert best_by_metric(trials, "r2").config.look_back == 10
    failed = TrialResult(trials[0].config, 1, error="zu kurz")
    assert best_by_metric([failed], "smape") is None


def test_grid_runs_all_trials_and_records_failures(daily_field):
    grid = GridSpec(sampling_days=(10, 20), look_back=(5, 100), **SMALL)
    report = grid_search(daily_field, grid)
    assert len(report.trials) == 4
    assert len(report.failed) == 2
    assert all(t.config.look_back == 100 for t in report.failed)
    assert all(t.error for t in report.failed)
    frame = report.frame()
    assert list(frame["status"]).count("failed") == 2
    mm = report.marginal_means("sampling_days")
    assert list(mm["sampling_days"]) == [10, 20]
    assert list(mm["n_trials"]) == [1, 1]


def test_singleton_grid_equals_rolling_evaluation(daily_field):
    grid = GridSpec(sampling_days=(10,), look_back=(5,), **SMALL)
    report = grid_search(daily_field, grid)
    (trial,) = report.trials

    data = trim_rampup(resample_mean(daily_field, 10))
    cfg = RollingConfig.from_days(
        WindowConfig(5, 1, "full_field"), EstimatorSpec("ols"), data.step_days,
        min_train_days=365, retrain_days=180, horizon_days=90,
    )
    direct = run_rolling_evaluation(data, cfg)
    assert trial.n_rounds == len(direct.rounds)
    assert trial.metrics == pytest.approx(dict(direct.aggregate))


def test_parallel_workers_give_identical_report(daily_field):
    base = dict(sampling_days=(10, 20), look_back=(5, 8), estimator=("ols", "ridge"), **SMALL)
    serial = grid_search(daily_field, GridSpec(**base)).frame()
    parallel = grid_search(daily_field, GridSpec(workers=3, **base)).frame()
    assert serial.equals(parallel)


def test_longer_training_window_is_not_worse():
    ds = generate_field(replace(default_synth_spec(seed=11, n_steps=2190, noise=0.02), nonlinearity=0.3))
    grid = GridSpec(sampling_days=(10,), look_back=(10,), min_train_days=(365, 1095), retrain_days=(365,), horizon_days=180)
    report = grid_search(ds, grid)
    mm = report.marginal_means("min_train_days").set_index("min_train_days")
    assert mm.loc[1095, "smape"] <= mm.loc[365, "smape"]


def test_empty_report_helpers():
    report = GridReport(())
    assert report.best_by("smape") is None
    assert report.marginal_means("look_back").empty


def test_singular_trial_is_recorded_not_raised(daily_field, monkeypatch):
    def _singular(ds, cfg):
        if cfg.window.look_back == 5:
            raise np.linalg.LinAlgError("Singular matrix")
        return run_rolling_evaluation(ds, cfg)

    monkeypatch.setattr("wellcast.gridsearch.run_rolling_evaluation", _singular)
    grid = GridSpec(sampling_days=(10,), look_back=(5, 6), **SMALL)
    report = grid_search(daily_field, grid)
    assert len(report.trials) == 2
    assert [t.config.look_back for t in report.failed] == [5]
    assert report.failed[0].error == "LinAlgError: Singular matrix"
    assert len(report.successful) == 1
