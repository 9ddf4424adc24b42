# wellcast/metrics.py
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

METRIC_NAMES: tuple[str, ...] = ("smape", "mape", "rmse", "r2", "mae", "mse")
ERROR_METRICS: tuple[str, ...] = ("smape", "mape", "rmse", "mae", "mse")
RADAR_METRICS: tuple[str, ...] = ("smape", "mape", "mae", "mse")


@dataclass(frozen=True)
class MetricsReport:
    smape: float
    mape: float
    rmse: float
    r2: float
    mae: float
    mse: float
    n_points: int
    n_skipped_zero_actuals: int = 0

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    def metric(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise DataError(f"unbekannte Metrik {name!r}")
        return float(getattr(self, name))


def compute_metrics(actual: Sequence[float] | np.ndarray, predicted: Sequence[float] | np.ndarray) -> MetricsReport:
    """
    Fehler = vorhergesagt - tatsächlich.
    - MAPE überspringt Terme mit Ist = 0 (gezählt in n_skipped_zero_actuals)
    - SMAPE-Terme mit Ist + Prognose = 0 zählen 0
    - R² mit dem Mittel der Istwerte
    """
    a = np.asarray(actual, dtype=float).reshape(-1)
    p = np.asarray(predicted, dtype=float).reshape(-1)
    if a.size == 0:
        raise DataError("Metriken ohne Datenpunkte")
    if a.size != p.size:
        raise DataError(f"Metriken: {a.size} Istwerte, {p.size} Prognosewerte")

    e = p - a
    abs_e = np.abs(e)
    n = a.size

    nz = a != 0
    skipped = int(n - nz.sum())
    mape = float(np.mean(abs_e[nz] / np.abs(a[nz]))) if nz.any() else math.nan

    denom = (a + p) / 2.0
    terms = np.divide(abs_e, denom, out=np.zeros(n), where=denom != 0)
    smape = float(np.mean(terms))

    mse = float(np.mean(e * e))
    sse = float(np.sum(e * e))
    sst = float(np.sum((a - a.mean()) ** 2))
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse == 0 else 0.0

    return MetricsReport(
        smape=smape,
        mape=mape,
        rmse=math.sqrt(mse),
        r2=r2,
        mae=float(np.mean(abs_e)),
        mse=mse,
        n_points=int(n),
        n_skipped_zero_actuals=skipped,
    )


def mean_metrics(reports: Iterable[MetricsReport]) -> dict[str, float]:
    """Mittel je Metrik über mehrere Berichte (NaN-MAPE wird ignoriert)."""
    rows = list(reports)
    out: dict[str, float] = {}
    for m in METRIC_NAMES:
        vals = np.array([r.metric(m) for r in rows], dtype=float)
        finite = vals[np.isfinite(vals)]
        out[m] = float(finite.mean()) if finite.size else math.nan
    return out


def _metric_value(report: MetricsReport | Mapping[str, float], name: str) -> float:
    if isinstance(report, MetricsReport):
        return report.metric(name)
    return float(report[name])


def radar_normalize(
    reports: Mapping[str, MetricsReport | Mapping[str, float]],
    metrics: Sequence[str] = RADAR_METRICS,
) -> dict[str, dict[str, float]]:
    """
    Jede Metrik wird durch ihr Maximum über alle Schätzer geteilt; außen = schlechteste.
    Spalten, die komplett 0 sind, bleiben 0.
    """
    if not reports:
        raise DataError("radar_normalize: keine Schätzer")
    out: dict[str, dict[str, float]] = {name: {} for name in reports}
    for m in metrics:
        col = {name: _metric_value(r, m) for name, r in reports.items()}
        if any((not math.isfinite(v)) or v < 0 for v in col.values()):
            raise DataError(f"radar_normalize: Metrik {m} enthält negative oder ungültige Werte")
        mx = max(col.values())
        for name, v in col.items():
            out[name][m] = v / mx if mx > 0 else 0.0
    return out


def radar_points(normalized: Mapping[str, Mapping[str, float]]) -> list[dict[str, object]]:
    """Polarkoordinaten (Winkel im Bogenmaß, Radius) je Schätzer/Metrik für den Plot."""
    rows: list[dict[str, object]] = []
    for est, vals in normalized.items():
        names = list(vals)
        for j, m in enumerate(names):
            rows.append(
                {
                    "estimator": est,
                    "metric": m,
                    "angle": 2.0 * math.pi * j / len(names),
                    "radius": float(vals[m]),
                }
            )
    return rows
