# wellcast/services/field_io.py
from __future__ import annotations

import logging
import math
import re
from datetime import date, timedelta
from functools import reduce
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..dataset import (
    INJECTOR_PHASES,
    PRODUCER_PHASES,
    FieldDataset,
    ProductionTest,
    RateSeries,
    WellRecord,
)
from ..errors import ConflictError, GridError, ParseError

log = logging.getLogger(__name__)

FIELD_COLUMNS = ["date", "well_id", "role", "q_o", "q_g", "q_w", "q_wi", "q_gi"]
TEST_COLUMNS = ["date", "well_id", "q_o", "q_g", "q_w"]

# CSV-Spalte <-> Phase
RATE_COLUMNS: dict[str, str] = {
    "q_o": "oil",
    "q_g": "gas",
    "q_w": "water",
    "q_wi": "water_inj",
    "q_gi": "gas_inj",
}
PHASE_COLUMNS: dict[str, str] = {v: k for k, v in RATE_COLUMNS.items()}


# -----------------------------------------------------------------------------
# Zellen-Helfer
# -----------------------------------------------------------------------------
def _norm_none(v: Any) -> str | None:
    if v is None:
        return None
    if isinstance(v, float) and math.isnan(v):
        return None
    s = str(v).strip()
    return s or None


def _parse_date(v: Any, *, path: str, line: int) -> date:
    s = _norm_none(v)
    if s is None:
        raise ParseError(path, line, "Datum fehlt")
    try:
        return date.fromisoformat(s)
    except ValueError:
        raise ParseError(path, line, f"ungültiges Datum {s!r} (erwartet YYYY-MM-DD)") from None


def _parse_rate(v: Any, *, path: str, line: int, column: str) -> float | None:
    s = _norm_none(v)
    if s is None:
        return None
    try:
        x = float(s)
    except ValueError:
        raise ParseError(path, line, f"{column}: keine Zahl {s!r}") from None
    if not math.isfinite(x) or x < 0:
        raise ParseError(path, line, f"{column}: ungültige Rate {s!r}")
    return x


def _read_frame(path: Path, required: list[str]) -> pd.DataFrame:
    p = str(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(p, int(m.group(1)) if m else 0, f"fehlerhafte Zeile ({exc})") from None
    except pd.errors.EmptyDataError:
        raise ParseError(p, 1, "Datei ist leer") from None

    df.columns = [str(c).strip() for c in df.columns]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise ParseError(p, 1, f"Pflichtspalten fehlen: {', '.join(missing)}")
    return df


# -----------------------------------------------------------------------------
# Feldtabelle
# -----------------------------------------------------------------------------
def load_field_table(path: Path | str) -> FieldDataset:
    """
    Liest die Feldtabelle im Langformat:
      date,well_id,role,q_o,q_g,q_w,q_wi,q_gi

    - leere Ratenzelle = 0 (Shut-in-Konvention)
    - Rolle aus Spalte 'role', sonst aus den belegten Phasen abgeleitet
    - Schrittweite = ggT der Datumsabstände (Tagesdaten -> 1)
    - Bohrungen werden auf den gemeinsamen Datumsbereich gelegt; vor Beginn /
      nach Ende einer Bohrung gilt 0, Lücken innerhalb sind ein Fehler
    """
    path = Path(path)
    p = str(path)
    df = _read_frame(path, [c for c in FIELD_COLUMNS if c != "role"])
    has_role = "role" in df.columns

    rows: dict[str, dict[date, dict[str, float]]] = {}
    roles: dict[str, str] = {}
    seen_phase: dict[str, set[str]] = {}
    first_line: dict[tuple[date, str], int] = {}

    for idx, rec in enumerate(df.to_dict(orient="records")):
        line = idx + 2  # Header = Zeile 1
        well_id = _norm_none(rec.get("well_id"))
        if well_id is None:
            raise ParseError(p, line, "well_id fehlt")
        d = _parse_date(rec.get("date"), path=p, line=line)

        key = (d, well_id)
        if key in first_line:
            raise ConflictError(
                f"{p}, Zeile {line}: doppelter Eintrag für {well_id} am {d} (erstmals Zeile {first_line[key]})"
            )
        first_line[key] = line

        rates: dict[str, float] = {}
        for col, phase in RATE_COLUMNS.items():
            x = _parse_rate(rec.get(col), path=p, line=line, column=col)
            if x is not None:
                seen_phase.setdefault(well_id, set()).add(phase)
            rates[phase] = 0.0 if x is None else x
        rows.setdefault(well_id, {})[d] = rates

        role = _norm_none(rec.get("role")) if has_role else None
        if role is not None:
            role = role.lower()
            if role not in ("producer", "injector"):
                raise ParseError(p, line, f"unbekannte Rolle {role!r}")
            if roles.get(well_id, role) != role:
                raise ConflictError(f"{p}, Zeile {line}: widersprüchliche Rolle für {well_id}")
            roles[well_id] = role

    if not rows:
        raise ParseError(p, 2, "keine Datenzeilen")

    all_dates = sorted({d for per in rows.values() for d in per})
    diffs = [(b - a).days for a, b in zip(all_dates, all_dates[1:])]
    step = reduce(math.gcd, diffs) if diffs else 1
    start, end = all_dates[0], all_dates[-1]
    n_steps = (end - start).days // step + 1

    wells: list[WellRecord] = []
    for well_id, per in rows.items():
        wd = sorted(per)
        for a, b in zip(wd, wd[1:]):
            if (b - a).days != step:
                raise GridError(well_id, a + timedelta(days=step))

        role = roles.get(well_id) or _infer_role(well_id, per)
        if role == "producer":
            phases = PRODUCER_PHASES
        else:
            phases = tuple(
                ph for ph in INJECTOR_PHASES
                if ph in seen_phase.get(well_id, set()) and any(r[ph] > 0 for r in per.values())
            ) or ("water_inj",)

        series: dict[str, RateSeries] = {}
        for ph in phases:
            values = np.zeros(n_steps)
            for d, r in per.items():
                values[(d - start).days // step] = r[ph]
            series[ph] = RateSeries(start, step, values)
        wells.append(WellRecord(well_id, role, series))  # type: ignore[arg-type]

    ds = FieldDataset(tuple(wells), start, step, n_steps)
    log.info(
        "load_field_table: path=%s wells=%s producers=%s injectors=%s n_steps=%s step_days=%s",
        p, len(ds.wells), len(ds.producers), len(ds.injectors), n_steps, step,
    )
    return ds


def _infer_role(well_id: str, per: dict[date, dict[str, float]]) -> str:
    prod = any(r[ph] > 0 for r in per.values() for ph in PRODUCER_PHASES)
    inj = any(r[ph] > 0 for r in per.values() for ph in INJECTOR_PHASES)
    if prod and inj:
        raise ConflictError(
            f"Rolle für {well_id} nicht ableitbar: Förder- und Injektionsraten belegt (Spalte 'role' setzen)"
        )
    return "injector" if inj else "producer"


def field_table_frame(ds: FieldDataset) -> pd.DataFrame:
    records: list[dict[str, Any]] = []
    for i in range(ds.n_steps):
        d = ds.date_at(i).isoformat()
        for w in ds.wells:
            rec: dict[str, Any] = {"date": d, "well_id": w.well_id, "role": w.role}
            for col, phase in RATE_COLUMNS.items():
                s = w.series.get(phase)
                rec[col] = float(s.values[i]) if s is not None else None
            records.append(rec)
    return pd.DataFrame.from_records(records, columns=FIELD_COLUMNS)


def write_field_table(ds: FieldDataset, path: Path | str) -> Path:
    """Schreibt den Datensatz im Eingangsformat (nicht geführte Phasen = leere Zelle)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    field_table_frame(ds).to_csv(path, index=False, lineterminator="\n")
    return path


# -----------------------------------------------------------------------------
# Produktionstests
# -----------------------------------------------------------------------------
def load_production_tests(path: Path | str) -> list[ProductionTest]:
    """Produktionstests: date,well_id,q_o,q_g,q_w (leere Zelle = Phase nicht gemessen)."""
    path = Path(path)
    p = str(path)
    df = _read_frame(path, TEST_COLUMNS)

    out: list[ProductionTest] = []
    for idx, rec in enumerate(df.to_dict(orient="records")):
        line = idx + 2
        well_id = _norm_none(rec.get("well_id"))
        if well_id is None:
            raise ParseError(p, line, "well_id fehlt")
        d = _parse_date(rec.get("date"), path=p, line=line)
        rates: dict[str, float] = {}
        for col in ("q_o", "q_g", "q_w"):
            x = _parse_rate(rec.get(col), path=p, line=line, column=col)
            if x is not None:
                rates[RATE_COLUMNS[col]] = x
        if not rates:
            raise ParseError(p, line, "Produktionstest ohne Raten")
        out.append(ProductionTest(well_id, d, rates))

    out.sort(key=lambda t: (t.well_id, t.date))
    log.info("load_production_tests: path=%s tests=%s", p, len(out))
    return out
