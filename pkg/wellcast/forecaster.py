# wellcast/forecaster.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Literal, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .dataset import FIELD, INJECTOR_PHASES, FieldDataset
from .errors import DataError, EmptyResultError, InsufficientHistoryError, ScheduleExhaustedError, SchemaError
from .estimators import EstimatorSpec, ModelBundle, predict, train_bundle
from .metrics import METRIC_NAMES, MetricsReport, compute_metrics, mean_metrics
from .windowing import ColumnKey, Scope, SeriesKey, WindowConfig, build_supervised, series_matrix

log = logging.getLogger(__name__)

WindowPolicy = Literal["incremental", "fixed"]
ScoreSpace = Literal["raw", "normalized"]


# -----------------------------------------------------------------------------
# Injektionsplan
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class InjectionSchedule:
    """
    Geplante Injektionsraten je (Bohrung, Phase); Index 0 = Zukunftsschritt 1.
    source benennt die Herkunft (Dateipfad oder "dataset") für Fehlermeldungen.
    """

    rates: Mapping[SeriesKey, np.ndarray]
    source: str = "schedule"

    def __post_init__(self) -> None:
        frozen: dict[SeriesKey, np.ndarray] = {}
        for key, values in self.rates.items():
            if key.phase not in INJECTOR_PHASES:
                raise DataError(f"Injektionsplan {self.source}: {key.well_id}/{key.phase} ist keine Injektionsphase")
            arr = np.array(values, dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DataError(f"Injektionsplan {self.source}: ungültige Raten für {key.well_id}/{key.phase}")
            arr.setflags(write=False)
            frozen[key] = arr
        object.__setattr__(self, "rates", dict(sorted(frozen.items())))

    @property
    def keys(self) -> tuple[SeriesKey, ...]:
        return tuple(self.rates)

    @property
    def length(self) -> int:
        """Anzahl Schritte, die für alle Reihen geplant sind."""
        return min((len(v) for v in self.rates.values()), default=0)

    def rate(self, key: SeriesKey, step_index: int, hold_last: bool = False) -> float:
        """Rate für Zukunftsschritt step_index (1-basiert)."""
        arr = self.rates.get(key)
        if arr is None:
            raise SchemaError(f"Injektionsplan {self.source}: keine Raten für {key.well_id}/{key.phase}")
        if step_index < 1:
            raise DataError(f"Injektionsplan {self.source}: Schritt {step_index} < 1")
        if step_index > len(arr):
            if hold_last and len(arr) > 0:
                return float(arr[-1])
            raise ScheduleExhaustedError(self.source, step_index, len(arr))
        return float(arr[step_index - 1])

    @classmethod
    def from_dataset(
        cls,
        ds: FieldDataset,
        start: int,
        H: Optional[int] = None,
        scope: Scope = "full_field",
        source: str = "dataset",
    ) -> "InjectionSchedule":
        """Tatsächliche Injektionen ab Schritt start als Plan (am Datensatzende gekürzt)."""
        stop = ds.n_steps if H is None else min(ds.n_steps, int(start) + int(H))
        if start < 0 or start >= ds.n_steps:
            raise EmptyResultError(f"Injektionsplan ab Schritt {start} liegt außerhalb des Datensatzes")
        rates: dict[SeriesKey, np.ndarray] = {}
        if scope == "full_field":
            totals = ds.field_totals()
            for ph in INJECTOR_PHASES:
                rates[SeriesKey(FIELD, ph)] = totals[ph][start:stop]
        else:
            for w in ds.injectors:
                for ph, s in w.series.items():
                    rates[SeriesKey(w.well_id, ph)] = s.values[start:stop]
        return cls(rates, source)


# -----------------------------------------------------------------------------
# Ein Schritt
# -----------------------------------------------------------------------------
def window_to_row(window: np.ndarray) -> np.ndarray:
    """(i × S)-Fenster -> Eingangszeile in Spaltenreihenfolge Reihe-für-Reihe, Lags aufsteigend."""
    return np.asarray(window, dtype=float).T.reshape(1, -1)


def assemble_next_input(
    window: np.ndarray,
    series: Sequence[SeriesKey],
    predicted: Sequence[float] | np.ndarray,
    schedule: InjectionSchedule,
    step_index: int,
    hold_last: bool = False,
) -> np.ndarray:
    """
    Schiebt das Fenster um einen Schritt weiter: ältester Zeitschnitt fällt weg,
    neuer Schnitt = vorhergesagte Förderraten (Reihenfolge der Förderreihen in
    series) plus geplante Injektion für step_index.
    """
    W = np.asarray(window, dtype=float)
    if W.ndim != 2 or W.shape[1] != len(series):
        raise SchemaError(f"Fenster hat Form {W.shape}, erwartet (i, {len(series)})")
    out_pos = [s for s, key in enumerate(series) if key.is_output]
    pred = np.asarray(predicted, dtype=float).reshape(-1)
    if pred.size != len(out_pos):
        raise SchemaError(f"{pred.size} Prognosewerte für {len(out_pos)} Förderreihen")

    new = np.empty(len(series))
    new[out_pos] = np.maximum(pred, 0.0)
    for s, key in enumerate(series):
        if not key.is_output:
            new[s] = schedule.rate(key, step_index, hold_last)
    return np.vstack([W[1:], new[None, :]])


# -----------------------------------------------------------------------------
# Rekursive Prognose
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ForecastResult:
    origin_date: date
    step_days: int
    keys: tuple[SeriesKey, ...]
    predicted: np.ndarray  # H × Förderreihen
    descriptor: str
    actual: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        pred = np.array(self.predicted, dtype=float).reshape(-1, len(self.keys))
        if np.any(pred < 0):
            raise DataError("ForecastResult enthält negative Raten")
        pred.setflags(write=False)
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "keys", tuple(self.keys))
        if self.actual is not None:
            act = np.array(self.actual, dtype=float).reshape(pred.shape)
            act.setflags(write=False)
            object.__setattr__(self, "actual", act)

    @property
    def horizon(self) -> int:
        return int(self.predicted.shape[0])

    @property
    def dates(self) -> list[date]:
        return [self.origin_date + timedelta(days=h * self.step_days) for h in range(self.horizon)]

    def column(self, key: SeriesKey) -> np.ndarray:
        return self.predicted[:, self.keys.index(key)]

    def with_actual(self, actual: np.ndarray) -> "ForecastResult":
        return replace(self, actual=actual)

    def frame(self) -> pd.DataFrame:
        """Langformat: date,well_id,phase,predicted_rate[,actual_rate]."""
        records = []
        for h, d in enumerate(self.dates):
            for j, key in enumerate(self.keys):
                rec = {
                    "date": d.isoformat(),
                    "well_id": key.well_id,
                    "phase": key.phase,
                    "predicted_rate": float(self.predicted[h, j]),
                }
                if self.actual is not None:
                    rec["actual_rate"] = float(self.actual[h, j])
                records.append(rec)
        return pd.DataFrame.from_records(records)


def _expected_x_keys(series: Sequence[SeriesKey], look_back: int) -> tuple[ColumnKey, ...]:
    return tuple(ColumnKey(s.well_id, s.phase, lag) for s in series for lag in range(-look_back, 0))


def forecast_recursive(
    bundle: ModelBundle,
    history: FieldDataset,
    schedule: InjectionSchedule,
    H: int,
    hold_last: bool = False,
) -> ForecastResult:
    """
    H Einzelschritte: normalisieren -> Schätzer -> denormalisieren -> bei 0 kappen
    -> Fenster mit Prognose und Plan fortschreiben. Spätere Schritte sehen
    zunehmend eigene Prognosen statt Historie.
    """
    cfg = bundle.window
    if cfg.look_forward != 1:
        raise SchemaError(f"Rekursive Prognose nur mit look_forward=1 (Modell: {cfg.look_forward})")
    if H < 1:
        raise DataError(f"Horizont muss >= 1 sein (ist {H})")

    keys, M = series_matrix(history, cfg.scope)
    series = bundle.series
    if tuple(keys) != series or bundle.x_keys != _expected_x_keys(series, cfg.look_back):
        raise SchemaError("Historie passt nicht zu den Eingangsspalten des Modells")
    i = cfg.look_back
    if M.shape[0] < i:
        raise InsufficientHistoryError(i, M.shape[0])

    out_keys = tuple(k.series for k in bundle.y_keys)
    if out_keys != tuple(s for s in series if s.is_output):
        raise SchemaError("Ausgangsspalten des Modells passen nicht zu den Förderreihen")

    nz = bundle.normalizer
    window = M[-i:].copy()
    preds = np.empty((int(H), len(out_keys)))
    for h in range(1, int(H) + 1):
        y_norm = predict(bundle.estimator, nz.normalize_x(window_to_row(window)))
        y = np.maximum(nz.denormalize_y(y_norm)[0], 0.0)
        preds[h - 1] = y
        window = assemble_next_input(window, series, y, schedule, h, hold_last)

    origin = history.date_at(history.n_steps)
    log.debug("forecast_recursive: %s origin=%s H=%s", bundle.descriptor, origin, H)
    return ForecastResult(origin, history.step_days, out_keys, preds, bundle.descriptor)


# -----------------------------------------------------------------------------
# Rollierende Auswertung
# -----------------------------------------------------------------------------
def days_to_steps(days: int, step_days: int) -> int:
    """Tage -> Schritte, aufgerundet (mindestens 1)."""
    return max(1, math.ceil(int(days) / int(step_days)))


@dataclass(frozen=True)
class RollingConfig:
    """Alle Längen in Schritten der Datensatzabtastung."""

    window: WindowConfig
    estimator: EstimatorSpec
    min_train: int
    cadence: int
    horizon: int
    policy: WindowPolicy = "incremental"
    fixed_length: Optional[int] = None
    validation_fraction: float = 0.15
    score_space: ScoreSpace = "raw"
    hold_last: bool = False

    def __post_init__(self) -> None:
        if self.window.look_forward != 1:
            raise DataError("Rollierende Auswertung nur mit look_forward=1")
        if self.min_train < self.window.look_back + 1:
            raise DataError(
                f"min_train ({self.min_train}) muss >= look_back + 1 ({self.window.look_back + 1}) sein"
            )
        if self.cadence < 1:
            raise DataError(f"Retrain-Kadenz muss >= 1 sein (ist {self.cadence})")
        if self.horizon < 1:
            raise DataError(f"Horizont muss >= 1 sein (ist {self.horizon})")
        if self.policy not in ("incremental", "fixed"):
            raise DataError(f"unbekannte Fensterstrategie {self.policy!r}")
        if self.fixed_length is not None and not (self.window.look_back + 1 <= self.fixed_length <= self.min_train):
            raise DataError(f"fixed_length muss in [look_back + 1, min_train] liegen (ist {self.fixed_length})")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise DataError("validation_fraction muss in [0, 1) liegen")
        if self.score_space not in ("raw", "normalized"):
            raise DataError(f"unbekannter score_space {self.score_space!r}")

    @classmethod
    def from_days(
        cls,
        window: WindowConfig,
        estimator: EstimatorSpec,
        step_days: int,
        min_train_days: int = 1095,
        retrain_days: int = 365,
        horizon_days: int = 180,
        **kw,
    ) -> "RollingConfig":
        return cls(
            window=window,
            estimator=estimator,
            min_train=days_to_steps(min_train_days, step_days),
            cadence=days_to_steps(retrain_days, step_days),
            horizon=days_to_steps(horizon_days, step_days),
            **kw,
        )

    @property
    def train_length(self) -> int:
        """Länge des festen Fensters (Policy 'fixed')."""
        return int(self.fixed_length or self.min_train)


def round_origins(n_steps: int, cfg: RollingConfig) -> list[int]:
    """Prognoseursprünge min_train + r·cadence, solange origin + H <= T."""
    need = cfg.min_train + cfg.horizon
    if n_steps < need:
        raise InsufficientHistoryError(need, n_steps)
    n_rounds = (n_steps - cfg.min_train - cfg.horizon) // cfg.cadence + 1
    return [cfg.min_train + r * cfg.cadence for r in range(n_rounds)]


@dataclass(frozen=True, eq=False)
class RoundResult:
    index: int
    origin: int
    origin_date: date
    train_start_date: date
    train_rows: int
    val_rows: int
    max_train_origin_date: date
    forecast: ForecastResult
    metrics: MetricsReport


@dataclass(frozen=True, eq=False)
class RollingReport:
    descriptor: str
    rounds: tuple[RoundResult, ...]
    aggregate: Mapping[str, float]
    score_space: ScoreSpace = "raw"

    def assert_no_lookahead(self) -> None:
        for r in self.rounds:
            if not r.max_train_origin_date < r.origin_date:
                raise DataError(
                    f"Runde {r.index}: Trainingsdaten bis {r.max_train_origin_date} reichen an den Ursprung {r.origin_date}"
                )

    def frame(self) -> pd.DataFrame:
        """Eine Zeile je Runde mit Ursprung und allen sechs Metriken."""
        records = []
        for r in self.rounds:
            rec = {
                "round": r.index,
                "origin_date": r.origin_date.isoformat(),
                "train_start_date": r.train_start_date.isoformat(),
                "train_rows": r.train_rows,
                "val_rows": r.val_rows,
            }
            rec.update({m: r.metrics.metric(m) for m in METRIC_NAMES})
            records.append(rec)
        return pd.DataFrame.from_records(
            records, columns=["round", "origin_date", "train_start_date", "train_rows", "val_rows", *METRIC_NAMES]
        )


def _score(bundle: ModelBundle, result: ForecastResult, space: ScoreSpace) -> MetricsReport:
    actual = result.actual
    assert actual is not None
    pred = result.predicted
    if space == "normalized":
        nz = bundle.normalizer
        actual = nz.normalize_y(actual)
        pred = nz.normalize_y(pred)
    return compute_metrics(actual.reshape(-1), pred.reshape(-1))


def run_rolling_evaluation(ds: FieldDataset, cfg: RollingConfig) -> RollingReport:
    """
    Walk-forward: je Runde Training auf dem Policy-Fenster vor dem Ursprung
    (incremental = ab Datensatzbeginn, fixed = nachlaufendes Fenster), Prognose
    über H Schritte mit den tatsächlichen Injektionen als Plan, Bewertung gegen
    die tatsächliche Förderung. Jede Runde trainiert neu.
    """
    origins = round_origins(ds.n_steps, cfg)
    scope = cfg.window.scope
    is_mlp = cfg.estimator.kind == "mlp"
    rounds: list[RoundResult] = []

    for r, origin in enumerate(origins):
        start = 0 if cfg.policy == "incremental" else origin - cfg.train_length
        train_ds = ds.slice_steps(start, origin)
        ss = build_supervised(train_ds, cfg.window)

        n_val = int(math.floor(ss.n_rows * cfg.validation_fraction)) if is_mlp else 0
        n_fit = ss.n_rows - n_val
        if n_fit < 1:
            raise EmptyResultError(f"Runde {r}: keine Trainingszeilen nach Abzug der Validierung")
        bundle = train_bundle(cfg.estimator, cfg.window, ss.take(0, n_fit), ss.take(n_fit, ss.n_rows))

        schedule = InjectionSchedule.from_dataset(ds, origin, cfg.horizon, scope)
        result = forecast_recursive(bundle, train_ds, schedule, cfg.horizon, cfg.hold_last)

        keys, M = series_matrix(ds.slice_steps(origin, origin + cfg.horizon), scope)
        cols = [keys.index(k) for k in result.keys]
        result = result.with_actual(M[:, cols])
        metrics = _score(bundle, result, cfg.score_space)

        rounds.append(
            RoundResult(
                index=r,
                origin=origin,
                origin_date=ds.date_at(origin),
                train_start_date=ds.date_at(start),
                train_rows=n_fit,
                val_rows=n_val,
                max_train_origin_date=ss.row_origin_dates[-1],
                forecast=result,
                metrics=metrics,
            )
        )
        log.debug(
            "rolling: round=%s origin=%s train_rows=%s val_rows=%s smape=%.6g",
            r, ds.date_at(origin), n_fit, n_val, metrics.smape,
        )

    report = RollingReport(cfg.estimator.descriptor, tuple(rounds), mean_metrics(x.metrics for x in rounds), cfg.score_space)
    report.assert_no_lookahead()
    log.info(
        "run_rolling_evaluation: %s policy=%s rounds=%s mean_smape=%.6g",
        cfg.estimator.descriptor, cfg.policy, len(rounds), report.aggregate["smape"],
    )
    return report
