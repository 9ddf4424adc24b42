# wellcast/pipeline.py
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import pandas as pd

from .config import RunConfig
from .dataset import (
    FieldDataset,
    apply_potential,
    resample_mean,
    select_wells,
    smooth_injectors,
    trim_rampup,
)
from .decline import ArpsFit, fit_arps, forecast_arps
from .errors import DataError, NumericalError, WellcastError
from .estimators import ModelBundle, predict, train_bundle
from .forecaster import (
    ForecastResult,
    InjectionSchedule,
    RollingConfig,
    RollingReport,
    days_to_steps,
    forecast_recursive,
    run_rolling_evaluation,
)
from .gridsearch import AXES, GridReport, grid_search
from .metrics import METRIC_NAMES, MetricsReport, compute_metrics, radar_normalize
from .services.field_io import load_field_table, load_production_tests, write_field_table
from .services.forecast_io import (
    load_schedule_csv,
    write_forecast_csv,
    write_rolling_csv,
    write_rolling_forecasts_csv,
    write_schedule_csv,
)
from .services.model_io import load_model, save_model
from .services.plots_svg import emit_forecast_plots, emit_grid_plots, emit_radar_plot
from .services.report_docx import ReportContext, write_report_docx
from .synth import default_synth_spec, generate_field
from .windowing import (
    SupervisedSet,
    build_supervised,
    chronological_split,
    export_supervised_csv,
    normalize,
    series_matrix,
)

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


@dataclass
class PipelineResult:
    exit_code: int
    out_dir: Path
    manifest_path: Path
    files: list[Path] = field(default_factory=list)
    failed_stage: Optional[str] = None
    error: Optional[str] = None


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_frame(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


# -----------------------------------------------------------------------------
# Laufzustand
# -----------------------------------------------------------------------------
class PipelineRun:
    """
    Zwischenergebnisse werden bei Bedarf erzeugt: eine Stufe, deren Vorgänger
    nicht ausgewählt ist, rechnet ihn still nach (ohne dessen Artefakte).
    """

    def __init__(self, cfg: RunConfig) -> None:
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.files: list[Path] = []
        self._raw: Optional[FieldDataset] = None
        self._prepared: Optional[FieldDataset] = None
        self._conditioned: Optional[FieldDataset] = None
        self._splits: Optional[tuple[SupervisedSet, SupervisedSet, SupervisedSet]] = None
        self._bundle: Optional[ModelBundle] = None
        self.forecast: Optional[ForecastResult] = None
        self.forecast_history: Optional[FieldDataset] = None
        self.rolling: Optional[RollingReport] = None
        self.grid: Optional[GridReport] = None
        self.arps: dict[str, ArpsFit] = {}
        self.arps_metrics: Optional[MetricsReport] = None

    def emit(self, path: Path) -> Path:
        self.files.append(path)
        return path

    # ---- Datensatz ----------------------------------------------------------
    @property
    def raw(self) -> FieldDataset:
        if self._raw is None:
            self._raw = self._acquire(write=False)
        return self._raw

    def _acquire(self, write: bool) -> FieldDataset:
        cfg = self.cfg
        if cfg.input.synth:
            spec = default_synth_spec(cfg.seed, cfg.synth.n_steps, cfg.synth.noise)
            spec = replace(spec, nonlinearity=cfg.synth.nonlinearity, water_cut_growth=cfg.synth.water_cut_growth)
            ds = generate_field(spec)
            if write:
                self.emit(write_field_table(ds, self.out / "dataset_raw.csv"))
            return ds
        assert cfg.input.dataset is not None
        return load_field_table(cfg.input.dataset)

    @property
    def prepared(self) -> FieldDataset:
        """Auswahl, Potenzial und Glättung, noch in Originalabtastung."""
        if self._prepared is None:
            c = self.cfg.dataset
            ds = self.raw
            if c.wells:
                ds = select_wells(ds, c.wells)
            if c.potential:
                assert self.cfg.input.tests is not None
                ds, _untested = apply_potential(ds, load_production_tests(self.cfg.input.tests))
            if c.smoothing:
                ds = smooth_injectors(ds, days_to_steps(c.smoothing_days, ds.step_days))
            self._prepared = ds
        return self._prepared

    @property
    def conditioned(self) -> FieldDataset:
        if self._conditioned is None:
            c = self.cfg.dataset
            ds = self.prepared
            if c.sampling_days % ds.step_days:
                raise DataError(
                    f"dataset.sampling_days={c.sampling_days} ist kein Vielfaches der Datenschrittweite {ds.step_days}"
                )
            ds = resample_mean(ds, c.sampling_days // ds.step_days)
            if c.start_date is not None:
                ds = trim_rampup(ds, c.start_date)
            elif c.trim:
                ds = trim_rampup(ds)
            self._conditioned = ds
        return self._conditioned

    # ---- Modell -------------------------------------------------------------
    @property
    def splits(self) -> tuple[SupervisedSet, SupervisedSet, SupervisedSet]:
        if self._splits is None:
            ss = build_supervised(self.conditioned, self.cfg.window)
            self._splits = chronological_split(ss, self.cfg.split)
        return self._splits

    @property
    def bundle(self) -> ModelBundle:
        if self._bundle is None:
            if self.cfg.input.model is not None:
                self._bundle = load_model(self.cfg.input.model)
            else:
                train, val, _test = self.splits
                self._bundle = train_bundle(self.cfg.estimator, self.cfg.window, train, val)
        return self._bundle

    @property
    def horizon(self) -> int:
        return days_to_steps(self.cfg.forecast.horizon_days, self.conditioned.step_days)


# -----------------------------------------------------------------------------
# Stufen
# -----------------------------------------------------------------------------
def _stage_synth(run: PipelineRun) -> None:
    run._raw = run._acquire(write=True)


def _stage_load(run: PipelineRun) -> None:
    run._raw = run._acquire(write=False)


def _stage_condition(run: PipelineRun) -> None:
    ds = run.conditioned
    run.emit(write_field_table(ds, run.out / "dataset.csv"))
    log.info("condition: n_steps=%s step_days=%s start=%s", ds.n_steps, ds.step_days, ds.start_date)


def _stage_reshape(run: PipelineRun) -> None:
    for name, part in zip(("train", "val", "test"), run.splits):
        run.emit(export_supervised_csv(part, run.out / f"supervised_{name}.csv"))


def _one_step_metrics(bundle: ModelBundle, part: SupervisedSet) -> MetricsReport:
    nz = bundle.normalizer
    pred = np.maximum(nz.denormalize_y(predict(bundle.estimator, normalize(part, nz).X)), 0.0)
    return compute_metrics(part.Y.reshape(-1), pred.reshape(-1))


def _stage_train(run: PipelineRun) -> None:
    bundle = run.bundle
    run.emit(save_model(bundle, run.out / "model.json"))
    _train, val, test = run.splits
    rows = []
    for name, part in (("val", val), ("test", test)):
        if part.n_rows:
            rows.append({"split": name, "rows": part.n_rows, **{m: _one_step_metrics(bundle, part).metric(m) for m in METRIC_NAMES}})
    run.emit(_write_frame(pd.DataFrame.from_records(rows, columns=["split", "rows", *METRIC_NAMES]), run.out / "train_metrics.csv"))


def _forecast_origin(run: PipelineRun) -> int:
    ds = run.conditioned
    return ds.n_steps if run.cfg.input.schedule is not None else ds.n_steps - run.horizon


def _stage_forecast(run: PipelineRun) -> None:
    """
    Mit input.schedule: Prognose über das Datensatzende hinaus nach Plan.
    Ohne: Rückprognose der letzten H Schritte mit den tatsächlichen Injektionen.
    """
    ds, H = run.conditioned, run.horizon
    scope = run.bundle.window.scope
    if run.cfg.input.schedule is not None:
        history = ds
        schedule = load_schedule_csv(run.cfg.input.schedule)
        actual = None
    else:
        origin = _forecast_origin(run)
        if origin < run.bundle.window.look_back:
            raise DataError(f"Datensatz zu kurz für eine Rückprognose über {H} Schritte")
        history = ds.slice_steps(0, origin)
        schedule = InjectionSchedule.from_dataset(ds, origin, H, scope)
        keys, M = series_matrix(ds.slice_steps(origin, origin + H), scope)
        actual = M[:, [i for i, k in enumerate(keys) if k.is_output]]
        run.emit(write_schedule_csv(schedule, run.out / "schedule_used.csv"))

    result = forecast_recursive(run.bundle, history, schedule, H, run.cfg.forecast.hold_last)
    if actual is not None:
        result = result.with_actual(actual)
        m = compute_metrics(actual.reshape(-1), result.predicted.reshape(-1))
        run.emit(_write_frame(pd.DataFrame([{m_: m.metric(m_) for m_ in METRIC_NAMES}]), run.out / "forecast_metrics.csv"))
    run.forecast, run.forecast_history = result, history
    run.emit(write_forecast_csv(result, run.out / "forecast.csv"))


def _rolling_config(run: PipelineRun) -> RollingConfig:
    r, step = run.cfg.rolling, run.conditioned.step_days
    return RollingConfig.from_days(
        run.cfg.window,
        run.cfg.estimator,
        step,
        min_train_days=r.min_train_days,
        retrain_days=r.retrain_days,
        horizon_days=r.horizon_days,
        policy=r.policy,  # type: ignore[arg-type]
        fixed_length=None if r.fixed_length_days is None else days_to_steps(r.fixed_length_days, step),
        validation_fraction=r.validation_fraction,
        score_space=r.score_space,  # type: ignore[arg-type]
        hold_last=run.cfg.forecast.hold_last,
    )


def _stage_evaluate(run: PipelineRun) -> None:
    run.rolling = run_rolling_evaluation(run.conditioned, _rolling_config(run))
    run.emit(write_rolling_csv(run.rolling, run.out / "rolling.csv"))
    run.emit(write_rolling_forecasts_csv(run.rolling, run.out / "rolling_forecasts.csv"))
    summary = pd.DataFrame([{"estimator": run.rolling.descriptor, "rounds": len(run.rolling.rounds), **run.rolling.aggregate}])
    run.emit(_write_frame(summary, run.out / "rolling_summary.csv"))


def _stage_gridsearch(run: PipelineRun) -> None:
    run.grid = grid_search(run.prepared, run.cfg.grid)
    run.emit(_write_frame(run.grid.frame(), run.out / "grid" / "trials.csv"))
    for axis in AXES:
        run.emit(_write_frame(run.grid.marginal_means(axis), run.out / "grid" / f"marginal_{axis}.csv"))
    best = [
        {"metric": m, "key": t.config.key if t else "", "value": t.metrics[m] if t and t.metrics else None}
        for m, t in run.grid.best().items()
    ]
    run.emit(_write_frame(pd.DataFrame.from_records(best, columns=["metric", "key", "value"]), run.out / "grid" / "best.csv"))


def _stage_decline(run: PipelineRun) -> None:
    """Arps-Vergleich je Produzent: Anpassung bis zum Prognoseursprung, dann H Schritte."""
    ds, H, phase = run.conditioned, run.horizon, run.cfg.decline.phase
    origin = _forecast_origin(run)
    params_rows, fc_rows = [], []
    actual_all, pred_all = [], []
    for w in ds.producers:
        values = w.series[phase].values[:origin]
        if values.size < 3 or np.any(values <= 0):
            log.warning("decline: %s skipped, series not strictly positive", w.well_id)
            continue
        fit = fit_arps(w.series[phase].with_values(values))
        run.arps[w.well_id] = fit
        params_rows.append(
            {"well_id": w.well_id, "q_i": fit.params.q_i, "d_i": fit.params.d_i, "b": fit.params.b,
             "residual_norm": fit.residual_norm, "warning": fit.warning}
        )
        fc = forecast_arps(fit.params, origin, H, ds.start_date, ds.step_days)
        act = w.series[phase].values[origin : origin + H] if origin + H <= ds.n_steps else None
        for h, (d, v) in enumerate(zip(fc.dates, fc.values)):
            fc_rows.append({"date": d.isoformat(), "well_id": w.well_id, "phase": phase, "predicted_rate": float(v),
                            "actual_rate": None if act is None else float(act[h])})
        if act is not None:
            actual_all.append(act)
            pred_all.append(fc.values)

    run.emit(_write_frame(pd.DataFrame.from_records(params_rows, columns=["well_id", "q_i", "d_i", "b", "residual_norm", "warning"]), run.out / "decline_params.csv"))
    run.emit(_write_frame(pd.DataFrame.from_records(fc_rows, columns=["date", "well_id", "phase", "predicted_rate", "actual_rate"]), run.out / "decline_forecast.csv"))
    if actual_all:
        run.arps_metrics = compute_metrics(np.concatenate(actual_all), np.concatenate(pred_all))
        run.emit(_write_frame(pd.DataFrame([{m: run.arps_metrics.metric(m) for m in METRIC_NAMES}]), run.out / "decline_metrics.csv"))


def _radar_input(run: PipelineRun) -> dict[str, dict[str, float]]:
    entries: dict[str, dict[str, float]] = {}
    if run.grid is not None and run.grid.successful:
        mm = run.grid.marginal_means("estimator")
        for rec in mm.to_dict(orient="records"):
            entries[str(rec["estimator"])] = {m: float(rec[m]) for m in METRIC_NAMES}
    elif run.rolling is not None:
        entries[run.rolling.descriptor] = dict(run.rolling.aggregate)
        if run.arps_metrics is not None:
            entries["arps"] = {m: run.arps_metrics.metric(m) for m in METRIC_NAMES}
    return entries


def _stage_plot(run: PipelineRun) -> None:
    plots = run.out / "plots"
    for p in emit_forecast_plots(run.forecast_history, run.forecast, plots, n_history=4 * run.horizon if run.forecast else None):
        run.emit(p)
    for p in emit_grid_plots(run.grid, plots):
        run.emit(p)
    entries = _radar_input(run)
    if not entries:
        log.warning("emit_plots: no metrics for radar chart, skipped")
        return
    try:
        normalized = radar_normalize(entries)
    except DataError as exc:
        log.warning("emit_plots: radar skipped (%s)", exc)
        return
    for p in emit_radar_plot(normalized, plots):
        run.emit(p)


def _stage_report(run: PipelineRun) -> None:
    cfg, ds = run.cfg, run.conditioned
    facts = [
        ("Datenquelle", "synthetisch" if cfg.input.synth else str(cfg.input.dataset)),
        ("Bohrungen", f"{len(ds.producers)} Produzenten, {len(ds.injectors)} Injektoren"),
        ("Zeitraum", f"{ds.start_date.isoformat()} .. {ds.date_at(ds.n_steps - 1).isoformat()}"),
        ("Abtastung", f"{ds.step_days} Tage"),
        ("Fenster", f"look_back={cfg.window.look_back}, scope={cfg.window.scope}"),
        ("Schätzer", cfg.estimator.descriptor),
        ("Seed", str(cfg.seed)),
    ]
    ctx = ReportContext("wellcast Laufbericht", facts, run.rolling, run.grid, run.arps)
    run.emit(write_report_docx(ctx, run.out / "report.docx"))


STAGE_FUNCS: dict[str, Callable[[PipelineRun], None]] = {
    "synth": _stage_synth,
    "load": _stage_load,
    "condition": _stage_condition,
    "reshape": _stage_reshape,
    "train": _stage_train,
    "forecast": _stage_forecast,
    "evaluate": _stage_evaluate,
    "gridsearch": _stage_gridsearch,
    "decline": _stage_decline,
    "plot": _stage_plot,
    "report": _stage_report,
}


# -----------------------------------------------------------------------------
# Ausführung + Manifest
# -----------------------------------------------------------------------------
def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, WellcastError):
        return exc.exit_code
    if isinstance(exc, (np.linalg.LinAlgError, FloatingPointError)):
        return NumericalError.exit_code
    return 1


def write_manifest(out_dir: Path, files: list[Path], manifest: dict[str, Any]) -> Path:
    entries = []
    for p in sorted(set(files)):
        if p.exists():
            entries.append({"path": p.relative_to(out_dir).as_posix(), "sha256": sha256_file(p), "bytes": p.stat().st_size})
    doc = {**manifest, "files": entries}
    path = out_dir / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def execute_pipeline(cfg: RunConfig, stages: Optional[tuple[str, ...]] = None) -> PipelineResult:
    """
    Führt die gewählten Stufen in Workflow-Reihenfolge aus. Bei einem Fehler
    bleiben die bisherigen Artefakte erhalten; das Manifest vermerkt die
    fehlgeschlagene Stufe und den Exitcode (2/3/4).
    """
    selected = tuple(stages if stages is not None else cfg.stages)
    order = ("synth" if cfg.input.synth else "load",) + tuple(s for s in STAGE_FUNCS if s in selected and s not in ("synth", "load"))
    run = PipelineRun(cfg)
    run.out.mkdir(parents=True, exist_ok=True)

    status: list[dict[str, str]] = []
    failed_stage: Optional[str] = None
    error: Optional[str] = None
    exit_code = 0
    for name in order:
        log.info("stage start: %s", name)
        try:
            STAGE_FUNCS[name](run)
        except Exception as exc:  # noqa: BLE001 - jede Stufe endet im Manifest
            exit_code = _exit_code_for(exc)
            failed_stage, error = name, str(exc)
            status.append({"name": name, "status": "failed"})
            if exit_code == 1:
                log.exception("stage %s failed", name)
            else:
                log.error("stage %s failed: %s", name, exc)
            break
        status.append({"name": name, "status": "ok"})
        log.info("stage done: %s", name)

    manifest = {
        "format_version": 1,
        "seed": cfg.seed,
        "stages": status,
        "status": "ok" if exit_code == 0 else "failed",
        "failed_stage": failed_stage,
        "error": error,
        "exit_code": exit_code,
    }
    path = write_manifest(run.out, run.files, manifest)
    log.info("manifest: path=%s files=%s status=%s", path, len(set(run.files)), manifest["status"])
    return PipelineResult(exit_code, run.out, path, list(run.files), failed_stage, error)
