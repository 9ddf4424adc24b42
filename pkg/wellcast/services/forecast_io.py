# wellcast/services/forecast_io.py
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import ParseError
from ..forecaster import ForecastResult, InjectionSchedule, RollingReport
from ..windowing import SeriesKey
from .field_io import _norm_none, _parse_rate, _read_frame

log = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ["step", "well_id", "phase", "rate"]


def _write(df: pd.DataFrame, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


# -----------------------------------------------------------------------------
# Injektionsplan
# -----------------------------------------------------------------------------
def load_schedule_csv(path: Path | str) -> InjectionSchedule:
    """
    step,well_id,phase,rate  (step 1-basiert, je Reihe lückenlos ab 1).
    Der Dateipfad wird als Quelle im Plan vermerkt.
    """
    path = Path(path)
    p = str(path)
    df = _read_frame(path, SCHEDULE_COLUMNS)

    per_key: dict[SeriesKey, dict[int, float]] = {}
    for idx, rec in enumerate(df.to_dict(orient="records")):
        line = idx + 2
        well_id = _norm_none(rec.get("well_id"))
        phase = _norm_none(rec.get("phase"))
        if well_id is None or phase is None:
            raise ParseError(p, line, "well_id/phase fehlt")
        try:
            step = int(str(rec.get("step")).strip())
        except ValueError:
            raise ParseError(p, line, f"step ist keine ganze Zahl: {rec.get('step')!r}") from None
        if step < 1:
            raise ParseError(p, line, f"step muss >= 1 sein (ist {step})")
        rate = _parse_rate(rec.get("rate"), path=p, line=line, column="rate")
        steps = per_key.setdefault(SeriesKey(well_id, phase), {})
        if step in steps:
            raise ParseError(p, line, f"doppelter Schritt {step} für {well_id}/{phase}")
        steps[step] = 0.0 if rate is None else rate

    rates: dict[SeriesKey, np.ndarray] = {}
    for key, steps in per_key.items():
        n = max(steps)
        missing = [s for s in range(1, n + 1) if s not in steps]
        if missing:
            raise ParseError(p, 0, f"{key.well_id}/{key.phase}: Schritt {missing[0]} fehlt")
        rates[key] = np.array([steps[s] for s in range(1, n + 1)])

    schedule = InjectionSchedule(rates, source=p)
    log.info("load_schedule_csv: path=%s series=%s length=%s", p, len(rates), schedule.length)
    return schedule


def write_schedule_csv(schedule: InjectionSchedule, path: Path | str) -> Path:
    records = [
        {"step": s + 1, "well_id": key.well_id, "phase": key.phase, "rate": float(v)}
        for key, arr in schedule.rates.items()
        for s, v in enumerate(arr)
    ]
    return _write(pd.DataFrame.from_records(records, columns=SCHEDULE_COLUMNS), path)


# -----------------------------------------------------------------------------
# Ergebnisse
# -----------------------------------------------------------------------------
def write_forecast_csv(result: ForecastResult, path: Path | str) -> Path:
    return _write(result.frame(), path)


def write_rolling_csv(report: RollingReport, path: Path | str) -> Path:
    return _write(report.frame(), path)


def write_rolling_forecasts_csv(report: RollingReport, path: Path | str) -> Path:
    """Alle Rundenprognosen untereinander, mit Rundennummer."""
    frames = []
    for r in report.rounds:
        df = r.forecast.frame()
        df.insert(0, "round", r.index)
        frames.append(df)
    return _write(pd.concat(frames, ignore_index=True), path)
