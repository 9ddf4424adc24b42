# tests/test_pipeline.py
from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import pytest
from click.testing import CliRunner

from wellcast.cli import main
from wellcast.config import parse_config
from wellcast.pipeline import execute_pipeline, sha256_file

from .conftest import write_text

BASE = """
[input]
synth = true
{extra_input}

[run]
seed = 42
stages = {stages}

[synth]
n_steps = 1200
noise = 0.01

[dataset]
sampling_days = 10

[window]
look_back = 6

[estimator]
kind = "{kind}"
hidden_size = 4

[mlp]
max_epochs = 30
patience = 5

[rolling]
min_train_days = 365
retrain_days = 365
horizon_days = 90

[forecast]
horizon_days = 90
"""

ALL = '["condition", "reshape", "train", "forecast", "evaluate", "decline", "plot"]'


def _config(tmp_path: Path, stages: str = ALL, kind: str = "ols", extra_input: str = "") -> Path:
    return write_text(tmp_path / "run.toml", BASE.format(stages=stages, kind=kind, extra_input=extra_input))


def _csv_bytes(out: Path) -> dict[str, bytes]:
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*.csv"))}


def test_full_pipeline_writes_artifacts_and_manifest(tmp_path):
    cfg = parse_config(_config(tmp_path), out_dir=tmp_path / "out")
    result = execute_pipeline(cfg)
    assert result.exit_code == 0
    out = result.out_dir
    for name in (
        "dataset_raw.csv", "dataset.csv", "supervised_train.csv", "model.json", "train_metrics.csv",
        "forecast.csv", "forecast_metrics.csv", "schedule_used.csv", "rolling.csv", "rolling_summary.csv",
        "decline_params.csv", "plots/forecast_oil.svg", "plots/forecast_oil.csv", "plots/radar.svg",
    ):
        assert (out / name).exists(), name

    manifest = json.loads(result.manifest_path.read_text(encoding="utf-8"))
    assert manifest["status"] == "ok"
    assert manifest["exit_code"] == 0
    listed = {e["path"]: e for e in manifest["files"]}
    for path in out.rglob("*"):
        if path.is_file() and path.name != "manifest.json":
            rel = path.relative_to(out).as_posix()
            assert rel in listed, rel
            assert listed[rel]["sha256"] == sha256_file(path)

    rolling = pd.read_csv(out / "rolling.csv")
    assert len(rolling) >= 2
    assert (pd.to_datetime(rolling["train_start_date"]) < pd.to_datetime(rolling["origin_date"])).all()


def test_two_runs_with_same_seed_are_byte_identical(tmp_path):
    path = _config(tmp_path, kind="mlp")
    a = execute_pipeline(parse_config(path, out_dir=tmp_path / "a"))
    b = execute_pipeline(parse_config(path, out_dir=tmp_path / "b"))
    assert a.exit_code == b.exit_code == 0
    left, right = _csv_bytes(a.out_dir), _csv_bytes(b.out_dir)
    assert left.keys() == right.keys()
    assert left == right
    assert (a.out_dir / "model.json").read_bytes() == (b.out_dir / "model.json").read_bytes()
    assert a.manifest_path.read_bytes() == b.manifest_path.read_bytes()


def test_short_schedule_fails_forecast_with_data_exit_code(tmp_path):
    sched = write_text(
        tmp_path / "plan.csv",
        "step,well_id,phase,rate\n"
        "1,FIELD,water_inj,3000\n2,FIELD,water_inj,3000\n"
        "1,FIELD,gas_inj,50000\n2,FIELD,gas_inj,50000\n",
    )
    path = _config(tmp_path, stages='["condition", "train", "forecast"]', extra_input=f'schedule = "{sched.name}"')
    result = execute_pipeline(parse_config(path, out_dir=tmp_path / "out"))
    assert result.exit_code == 3
    assert result.failed_stage == "forecast"
    assert str(sched) in (result.error or "")
    manifest = json.loads(result.manifest_path.read_text(encoding="utf-8"))
    assert manifest["status"] == "failed"
    assert manifest["stages"][-1] == {"name": "forecast", "status": "failed"}
    assert "model.json" in {e["path"] for e in manifest["files"]}


def test_forecast_with_schedule_beyond_data(tmp_path):
    rows = ["step,well_id,phase,rate"]
    for s in range(1, 10):
        rows += [f"{s},FIELD,water_inj,3000", f"{s},FIELD,gas_inj,50000"]
    sched = write_text(tmp_path / "plan.csv", "\n".join(rows) + "\n")
    path = _config(tmp_path, stages='["forecast"]', extra_input=f'schedule = "{sched.name}"')
    result = execute_pipeline(parse_config(path, out_dir=tmp_path / "out"))
    assert result.exit_code == 0
    df = pd.read_csv(tmp_path / "out" / "forecast.csv")
    assert len(df) == 9 * 3
    assert "actual_rate" not in df.columns
    assert (df["predicted_rate"] >= 0).all()


def test_saved_model_is_reused(tmp_path):
    first = execute_pipeline(parse_config(_config(tmp_path, stages='["train"]'), out_dir=tmp_path / "one"))
    model = first.out_dir / "model.json"
    path = _config(tmp_path, stages='["forecast"]', extra_input=f'model = "{model.as_posix()}"')
    second = execute_pipeline(parse_config(path, out_dir=tmp_path / "two"))
    assert second.exit_code == 0
    assert not (tmp_path / "two" / "model.json").exists()


# -----------------------------------------------------------------------------
# CLI
# -----------------------------------------------------------------------------
def test_cli_synth_command(tmp_path):
    path = _config(tmp_path)
    res = CliRunner().invoke(main, ["--config", str(path), "--out", str(tmp_path / "o"), "synth"])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "o" / "dataset_raw.csv").exists()
    assert not (tmp_path / "o" / "dataset.csv").exists()


def test_cli_config_error_exit_code(tmp_path):
    path = write_text(tmp_path / "bad.toml", "[window]\nlook_back = -1\n[input]\nsynth = true\n")
    res = CliRunner().invoke(main, ["--config", str(path), "pipeline"])
    assert res.exit_code == 2
    assert "window.look_back" in res.output


def test_cli_split_dates_out_of_order_exit_code(tmp_path):
    path = write_text(
        tmp_path / "bad.toml",
        '[input]\nsynth = true\n[split]\nval_start = "2021-01-01"\ntest_start = "2020-01-01"\n',
    )
    res = CliRunner().invoke(main, ["--config", str(path), "--out", str(tmp_path / "o"), "synth"])
    assert res.exit_code == 2
    assert "split.test_start" in res.output


def test_cli_synth_requires_synthetic_source(tmp_path):
    data = write_text(tmp_path / "f.csv", "date,well_id,q_o,q_g,q_w,q_wi,q_gi\n2020-01-01,P1,1,,,,\n")
    path = write_text(tmp_path / "run.toml", f'[input]\ndataset = "{data.name}"\n')
    res = CliRunner().invoke(main, ["--config", str(path), "synth"])
    assert res.exit_code == 2


def test_cli_data_error_exit_code(tmp_path):
    data = write_text(tmp_path / "f.csv", "date,well_id,q_o,q_g,q_w,q_wi,q_gi\n2020-01-01,P1,abc,,,,\n")
    path = write_text(tmp_path / "run.toml", f'[input]\ndataset = "{data.name}"\n')
    res = CliRunner().invoke(main, ["--config", str(path), "--out", str(tmp_path / "o"), "condition"])
    assert res.exit_code == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["failed_stage"] == "load"


@pytest.mark.parametrize("seed", ["1", "2"])
def test_cli_seed_override_changes_dataset(tmp_path, seed):
    path = _config(tmp_path)
    out = tmp_path / f"o{seed}"
    res = CliRunner().invoke(main, ["--config", str(path), "--out", str(out), "--seed", seed, "synth"])
    assert res.exit_code == 0
    assert json.loads((out / "manifest.json").read_text(encoding="utf-8"))["seed"] == int(seed)


def test_cli_report_command(tmp_path):
    pytest.importorskip("docx")
    path = _config(tmp_path)
    res = CliRunner().invoke(main, ["--config", str(path), "--out", str(tmp_path / "o"), "report"])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "o" / "report.docx").stat().st_size > 0
