# wellcast/gridsearch.py
from __future__ import annotations

import hashlib
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .dataset import FieldDataset, resample_mean, trim_rampup
from .errors import DataError, WellcastError
from .estimators import EstimatorSpec
from .estimators.mlp import MlpTrainConfig
from .forecaster import RollingConfig, run_rolling_evaluation
from .metrics import METRIC_NAMES
from .windowing import Scope, WindowConfig

log = logging.getLogger(__name__)

# Reihenfolge der Achsen = Reihenfolge im Konfigurationsschlüssel
AXES: tuple[str, ...] = (
    "sampling_days",
    "look_back",
    "estimator",
    "alpha",
    "hidden_size",
    "activation",
    "min_train_days",
    "policy",
    "retrain_days",
)


@dataclass(frozen=True)
class GridSpec:
    """Kandidatenwerte je Achse; jede Achse nicht leer."""

    sampling_days: tuple[int, ...] = (5, 10, 20)
    look_back: tuple[int, ...] = (10, 15, 25)
    estimator: tuple[str, ...] = ("ols",)
    alpha: tuple[float, ...] = (0.2,)
    hidden_size: tuple[int, ...] = (20,)
    activation: tuple[str, ...] = ("identity",)
    min_train_days: tuple[int, ...] = (1095,)
    policy: tuple[str, ...] = ("incremental",)
    retrain_days: tuple[int, ...] = (365,)
    # feste Einstellungen aller Trials
    horizon_days: int = 180
    scope: Scope = "full_field"
    trim: bool = True
    validation_fraction: float = 0.15
    mlp: MlpTrainConfig = field(default_factory=MlpTrainConfig)
    seed: int = 42
    workers: int = 1

    def __post_init__(self) -> None:
        for axis in AXES:
            values = tuple(getattr(self, axis))
            if not values:
                raise DataError(f"GridSpec: Achse {axis} ist leer")
            object.__setattr__(self, axis, values)
        if self.workers < 1:
            raise DataError("GridSpec: workers muss >= 1 sein")

    @property
    def n_trials(self) -> int:
        return math.prod(len(getattr(self, a)) for a in AXES)

    def trials(self) -> list["TrialConfig"]:
        return [TrialConfig(*values) for values in itertools.product(*(getattr(self, a) for a in AXES))]


@dataclass(frozen=True, order=True)
class TrialConfig:
    sampling_days: int
    look_back: int
    estimator: str
    alpha: float
    hidden_size: int
    activation: str
    min_train_days: int
    policy: str
    retrain_days: int

    @property
    def key(self) -> str:
        return "|".join(f"{a}={getattr(self, a)}" for a in AXES)


def trial_seed(global_seed: int, key: str) -> int:
    """Deterministischer Trial-Seed aus globalem Seed + Konfigurationsschlüssel (63 bit)."""
    s = f"WELLCAST|GRID|S{int(global_seed)}|{key}"
    h = hashlib.sha256(s.encode("utf-8")).digest()
    raw = int.from_bytes(h[:8], "big", signed=False)
    return raw % ((1 << 63) - 1)


@dataclass(frozen=True)
class TrialResult:
    config: TrialConfig
    seed: int
    metrics: Optional[Mapping[str, float]] = None  # Mittel über alle Runden
    n_rounds: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class GridReport:
    trials: tuple[TrialResult, ...]

    @property
    def successful(self) -> tuple[TrialResult, ...]:
        return tuple(t for t in self.trials if t.ok)

    @property
    def failed(self) -> tuple[TrialResult, ...]:
        return tuple(t for t in self.trials if not t.ok)

    def best_by(self, metric: str) -> Optional[TrialResult]:
        """argmin für Fehlermetriken, argmax für r2; Gleichstand -> erster Trial in Schlüsselreihenfolge."""
        return best_by_metric(self.trials, metric)

    def best(self) -> dict[str, Optional[TrialResult]]:
        return {m: self.best_by(m) for m in METRIC_NAMES}

    def frame(self) -> pd.DataFrame:
        """Eine Zeile je Trial."""
        records = []
        for t in self.trials:
            rec: dict[str, object] = {"key": t.config.key, **asdict(t.config), "seed": t.seed, "n_rounds": t.n_rounds}
            for m in METRIC_NAMES:
                rec[m] = None if t.metrics is None else t.metrics[m]
            rec["status"] = "ok" if t.ok else "failed"
            rec["error"] = t.error or ""
            records.append(rec)
        return pd.DataFrame.from_records(
            records, columns=["key", *AXES, "seed", "n_rounds", *METRIC_NAMES, "status", "error"]
        )

    def marginal_means(self, axis: str) -> pd.DataFrame:
        """Mittel jeder Metrik je Achsenwert über alle erfolgreichen Trials."""
        if axis not in AXES:
            raise DataError(f"unbekannte Achse {axis!r}")
        df = self.frame()
        df = df[df["status"] == "ok"]
        if df.empty:
            return pd.DataFrame(columns=[axis, "n_trials", *METRIC_NAMES])
        grouped = df.groupby(axis, sort=True)
        out = grouped[list(METRIC_NAMES)].mean()
        out.insert(0, "n_trials", grouped.size())
        return out.reset_index()


def best_by_metric(trials: Sequence[TrialResult], metric: str) -> Optional[TrialResult]:
    if metric not in METRIC_NAMES:
        raise DataError(f"unbekannte Metrik {metric!r}")
    ok = [t for t in trials if t.ok and t.metrics is not None and math.isfinite(t.metrics[metric])]
    if not ok:
        return None
    if metric == "r2":
        return max(ok, key=lambda t: t.metrics[metric])  # type: ignore[index]
    return min(ok, key=lambda t: t.metrics[metric])  # type: ignore[index]


# -----------------------------------------------------------------------------
# Ausführung
# -----------------------------------------------------------------------------
def _rolling_config(cfg: TrialConfig, grid: GridSpec, step_days: int, seed: int) -> RollingConfig:
    spec = EstimatorSpec(
        kind=cfg.estimator,  # type: ignore[arg-type]
        alpha=cfg.alpha,
        hidden_size=cfg.hidden_size,
        activation=cfg.activation,  # type: ignore[arg-type]
        mlp=replace(grid.mlp, seed=seed),
    )
    return RollingConfig.from_days(
        WindowConfig(cfg.look_back, 1, grid.scope),
        spec,
        step_days,
        min_train_days=cfg.min_train_days,
        retrain_days=cfg.retrain_days,
        horizon_days=grid.horizon_days,
        policy=cfg.policy,  # type: ignore[arg-type]
        validation_fraction=grid.validation_fraction,
    )


def run_trial(ds: FieldDataset, cfg: TrialConfig, grid: GridSpec) -> TrialResult:
    """resample -> trim -> reshape -> rollierende Auswertung; Fehler werden als Grund gespeichert."""
    seed = trial_seed(grid.seed, cfg.key)
    try:
        if cfg.sampling_days % ds.step_days:
            raise DataError(f"Abtastung {cfg.sampling_days} d ist kein Vielfaches der Datenschrittweite {ds.step_days} d")
        data = resample_mean(ds, cfg.sampling_days // ds.step_days)
        if grid.trim:
            data = trim_rampup(data)
        report = run_rolling_evaluation(data, _rolling_config(cfg, grid, data.step_days, seed))
    except (WellcastError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("grid_search: trial failed key=%s error=%s", cfg.key, exc)
        error = str(exc) if isinstance(exc, WellcastError) else f"{type(exc).__name__}: {exc}"
        return TrialResult(cfg, seed, error=error)
    return TrialResult(cfg, seed, dict(report.aggregate), len(report.rounds))


def grid_search(ds: FieldDataset, grid: GridSpec) -> GridReport:
    """
    Ein Trial je Punkt des kartesischen Produkts. Trials sind unabhängig und
    einzeln geseedet; mit workers > 1 parallel im Thread-Pool. Ergebnis nach
    Konfiguration sortiert, damit die Reihenfolge nicht vom Scheduling abhängt.
    """
    trials = grid.trials()
    log.info("grid_search: trials=%s workers=%s", len(trials), grid.workers)
    if grid.workers > 1:
        with ThreadPoolExecutor(max_workers=grid.workers) as pool:
            results = list(pool.map(lambda c: run_trial(ds, c, grid), trials))
    else:
        results = [run_trial(ds, c, grid) for c in trials]

    report = GridReport(tuple(sorted(results, key=lambda t: t.config)))
    if not report.successful:
        log.warning("grid_search: no successful trial")
    log.info("grid_search: ok=%s failed=%s", len(report.successful), len(report.failed))
    return report
