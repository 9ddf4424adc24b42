# wellcast/dataset.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Callable, Iterable, Literal, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, EmptyResultError, InertWellError, PotentialError

log = logging.getLogger(__name__)

Role = Literal["producer", "injector"]

PRODUCER_PHASES: tuple[str, ...] = ("oil", "gas", "water")
INJECTOR_PHASES: tuple[str, ...] = ("water_inj", "gas_inj")
# feste Reihenfolge für Spalten, Schlüssel und Ausgaben
PHASE_ORDER: tuple[str, ...] = PRODUCER_PHASES + INJECTOR_PHASES

FIELD = "FIELD"


# -----------------------------------------------------------------------------
# Domain types
# -----------------------------------------------------------------------------
def _frozen_array(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RateSeries:
    """
    Ratenreihe (m³/d) auf einem gleichmäßigen Datumsraster.
    values ist nach der Konstruktion schreibgeschützt.
    """

    start_date: date
    step_days: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = _frozen_array(self.values)
        object.__setattr__(self, "values", arr)
        if int(self.step_days) < 1:
            raise DataError(f"step_days muss >= 1 sein (ist {self.step_days})")
        if arr.size == 0:
            raise DataError("Ratenreihe ist leer")
        if not np.all(np.isfinite(arr)):
            raise DataError("Ratenreihe enthält nicht-endliche Werte")
        if np.any(arr < 0):
            raise DataError("Ratenreihe enthält negative Raten")

    def __len__(self) -> int:
        return int(self.values.size)

    def date_at(self, index: int) -> date:
        return self.start_date + timedelta(days=int(index) * int(self.step_days))

    @property
    def dates(self) -> list[date]:
        return [self.date_at(i) for i in range(len(self))]

    def with_values(self, values: Iterable[float]) -> "RateSeries":
        return RateSeries(self.start_date, self.step_days, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class WellRecord:
    well_id: str
    role: Role
    series: Mapping[str, RateSeries]

    def __post_init__(self) -> None:
        if self.role not in ("producer", "injector"):
            raise DataError(f"Bohrung {self.well_id}: unbekannte Rolle {self.role!r}")
        if not self.series:
            raise DataError(f"Bohrung {self.well_id}: keine Ratenreihen")

        allowed = PRODUCER_PHASES if self.role == "producer" else INJECTOR_PHASES
        bad = [p for p in self.series if p not in allowed]
        if bad:
            raise DataError(f"Bohrung {self.well_id} ({self.role}): unzulässige Phasen {', '.join(bad)}")

        ref = next(iter(self.series.values()))
        for p, s in self.series.items():
            if (s.start_date, s.step_days, len(s)) != (ref.start_date, ref.step_days, len(ref)):
                raise DataError(f"Bohrung {self.well_id}: Phase {p} liegt auf einem anderen Raster")

        # stabile Phasenreihenfolge, unabhängig von der Einfügereihenfolge
        ordered = {p: self.series[p] for p in PHASE_ORDER if p in self.series}
        object.__setattr__(self, "series", ordered)

    @property
    def phases(self) -> tuple[str, ...]:
        return tuple(self.series.keys())

    @property
    def is_producer(self) -> bool:
        return self.role == "producer"

    def active_mask(self) -> np.ndarray:
        """True je Schritt, an dem irgendeine Phase eine Rate > 0 hat."""
        return np.any(np.vstack([s.values for s in self.series.values()]) > 0, axis=0)

    def first_active_index(self) -> Optional[int]:
        """Erster Index mit einer Rate > 0 in irgendeiner Phase (None = nie aktiv)."""
        active = np.flatnonzero(self.active_mask())
        return int(active[0]) if active.size else None


@dataclass(frozen=True)
class ProductionTest:
    well_id: str
    date: date
    rates: Mapping[str, float]

    def __post_init__(self) -> None:
        for p, v in self.rates.items():
            if p not in PRODUCER_PHASES:
                raise DataError(f"Produktionstest {self.well_id} {self.date}: unbekannte Phase {p}")
            if not np.isfinite(v) or v < 0:
                raise DataError(f"Produktionstest {self.well_id} {self.date}: ungültige Rate {p}={v}")


@dataclass(frozen=True)
class FieldDataset:
    wells: tuple[WellRecord, ...]
    start_date: date
    step_days: int
    n_steps: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "wells", tuple(self.wells))
        if not self.wells:
            raise DataError("Datensatz enthält keine Bohrungen")
        ids = [w.well_id for w in self.wells]
        if len(set(ids)) != len(ids):
            raise DataError("Datensatz enthält doppelte Bohrungs-IDs")
        for w in self.wells:
            for p, s in w.series.items():
                if (s.start_date, s.step_days, len(s)) != (self.start_date, self.step_days, self.n_steps):
                    raise DataError(f"Bohrung {w.well_id}, Phase {p}: nicht auf dem Feldraster")
        if not any(w.is_producer for w in self.wells):
            raise DataError("Datensatz enthält keinen Produzenten")
        object.__setattr__(self, "_index", {wid: i for i, wid in enumerate(ids)})

    # -------------------------------------------------------------------------
    # Zugriff
    # -------------------------------------------------------------------------
    @property
    def producers(self) -> tuple[WellRecord, ...]:
        return tuple(w for w in self.wells if w.role == "producer")

    @property
    def injectors(self) -> tuple[WellRecord, ...]:
        return tuple(w for w in self.wells if w.role == "injector")

    @property
    def well_ids(self) -> tuple[str, ...]:
        return tuple(w.well_id for w in self.wells)

    def well(self, well_id: str) -> WellRecord:
        try:
            return self.wells[self._index[well_id]]
        except KeyError:
            raise DataError(f"Unbekannte Bohrung: {well_id}") from None

    def date_at(self, index: int) -> date:
        return self.start_date + timedelta(days=int(index) * int(self.step_days))

    @property
    def dates(self) -> list[date]:
        return [self.date_at(i) for i in range(self.n_steps)]

    def index_of(self, d: date) -> int:
        """Erster Rasterindex mit Datum >= d."""
        delta = (d - self.start_date).days
        if delta <= 0:
            return 0
        return -(-delta // self.step_days)

    def field_totals(self) -> dict[str, np.ndarray]:
        """Summe je Phase über alle Bohrungen (fehlende Phasen = 0)."""
        out = {p: np.zeros(self.n_steps) for p in PHASE_ORDER}
        for w in self.wells:
            for p, s in w.series.items():
                out[p] = out[p] + s.values
        return out

    # -------------------------------------------------------------------------
    # Ableitungen (immer neue Objekte)
    # -------------------------------------------------------------------------
    def slice_steps(self, start: int, stop: Optional[int] = None) -> "FieldDataset":
        stop = self.n_steps if stop is None else int(stop)
        start = int(start)
        if start < 0 or stop > self.n_steps or stop <= start:
            raise EmptyResultError(f"Leerer Ausschnitt [{start}, {stop}) bei {self.n_steps} Schritten")
        new_start = self.date_at(start)
        wells = tuple(
            WellRecord(
                w.well_id,
                w.role,
                {p: RateSeries(new_start, self.step_days, s.values[start:stop]) for p, s in w.series.items()},
            )
            for w in self.wells
        )
        return FieldDataset(wells, new_start, self.step_days, stop - start)

    def map_series(self, fn: Callable[[WellRecord, str, RateSeries], RateSeries]) -> "FieldDataset":
        """Wendet fn auf jede Reihe an; fn darf das Raster nicht verändern."""
        wells = tuple(
            WellRecord(w.well_id, w.role, {p: fn(w, p, s) for p, s in w.series.items()}) for w in self.wells
        )
        return FieldDataset(wells, self.start_date, self.step_days, self.n_steps)


# -----------------------------------------------------------------------------
# Operationen
# -----------------------------------------------------------------------------
def resample_mean(ds: FieldDataset, period_days: int) -> FieldDataset:
    """
    Blockmittelwerte über je period_days aufeinanderfolgende Eingangswerte
    (bei Tagesdaten = Tage). Ein unvollständiger Restblock am Ende entfällt.
    """
    p = int(period_days)
    if p < 1:
        raise DataError(f"period_days muss >= 1 sein (ist {period_days})")
    if p == 1:
        return ds
    if p > ds.n_steps:
        raise EmptyResultError(f"Resampling mit Periode {p} bei nur {ds.n_steps} Schritten ergibt keinen Block")

    n_blocks = ds.n_steps // p
    new_step = ds.step_days * p

    def _block_mean(values: np.ndarray) -> np.ndarray:
        return values[: n_blocks * p].reshape(n_blocks, p).mean(axis=1)

    wells = tuple(
        WellRecord(
            w.well_id,
            w.role,
            {ph: RateSeries(ds.start_date, new_step, _block_mean(s.values)) for ph, s in w.series.items()},
        )
        for w in ds.wells
    )
    log.debug("resample_mean: period=%s n_steps=%s -> %s dropped=%s", p, ds.n_steps, n_blocks, ds.n_steps % p)
    return FieldDataset(wells, ds.start_date, new_step, n_blocks)


def trim_rampup(ds: FieldDataset, override_start: Optional[date] = None) -> FieldDataset:
    """
    Schneidet die Ramp-up-Phase ab.

    Ohne override_start: ab dem ersten Datum, an dem jede Bohrung mindestens
    einmal gefördert bzw. injiziert hat. Ist eine Bohrung an diesem Datum gerade
    geschlossen, rückt der Schnitt bis zum nächsten Datum vor, an dem alle
    Bohrungen zugleich aktiv sind; ein zweiter Aufruf ändert dann nichts mehr.
    Mit override_start: ab diesem Datum.
    """
    if override_start is not None:
        start = ds.index_of(override_start)
        if start >= ds.n_steps:
            raise EmptyResultError(f"Startdatum {override_start} liegt hinter dem Datensatzende")
        log.debug("trim_rampup: override_start=%s index=%s", override_start, start)
        return ds if start == 0 else ds.slice_steps(start)

    firsts: dict[str, Optional[int]] = {w.well_id: w.first_active_index() for w in ds.wells}
    inert = [wid for wid, i in firsts.items() if i is None]
    if inert:
        raise InertWellError(inert)

    active = np.vstack([w.active_mask() for w in ds.wells])
    start = max(int(i) for i in firsts.values() if i is not None)
    while True:
        tail = active[:, start:]
        gone = [w.well_id for w, row in zip(ds.wells, tail) if not row.any()]
        if gone:
            raise InertWellError(gone, since=ds.date_at(start))
        nxt = start + int(tail.argmax(axis=1).max())
        if nxt == start:
            break
        start = nxt
    log.debug("trim_rampup: auto start index=%s date=%s", start, ds.date_at(start))
    return ds if start == 0 else ds.slice_steps(start)


def select_wells(ds: FieldDataset, well_ids: Sequence[str]) -> FieldDataset:
    """Teilmenge der Bohrungen, Reihenfolge wie im Datensatz."""
    wanted = set(well_ids)
    unknown = sorted(wanted - set(ds.well_ids))
    if unknown:
        raise DataError(f"Unbekannte Bohrungen: {', '.join(unknown)}")
    wells = tuple(w for w in ds.wells if w.well_id in wanted)
    return FieldDataset(wells, ds.start_date, ds.step_days, ds.n_steps)


def estimate_potential(daily: RateSeries, tests: Sequence[ProductionTest], phase: str) -> RateSeries:
    """
    Potenzial aus Produktionstests: an jedem Testdatum exakt die Testrate,
    dazwischen linear interpoliert, vor dem ersten Test rückwärts aufgefüllt,
    nach dem letzten Test gehalten.
    """
    usable = [t for t in tests if phase in t.rates]
    if not usable:
        raise PotentialError(f"Keine Produktionstests für Phase {phase} – Potenzial nicht bestimmbar")

    # bei gleichem Datum gewinnt der letzte Test
    by_pos: dict[float, float] = {}
    for t in sorted(usable, key=lambda t: t.date):
        by_pos[(t.date - daily.start_date).days / daily.step_days] = float(t.rates[phase])

    xp = np.array(sorted(by_pos))
    fp = np.array([by_pos[x] for x in xp])
    grid = np.arange(len(daily), dtype=float)
    # np.interp hält außerhalb von xp den Randwert: links = Backward-Fill, rechts = Hold-Last
    return daily.with_values(np.interp(grid, xp, fp))


def smooth_injection(s: RateSeries, window_steps: int) -> RateSeries:
    """Nachlaufender (kausaler) gleitender Mittelwert, am Anfang mit verkürztem Fenster."""
    w = int(window_steps)
    if w < 1:
        raise DataError(f"window_steps muss >= 1 sein (ist {window_steps})")
    if w == 1:
        return s
    smoothed = pd.Series(s.values).rolling(window=w, min_periods=1).mean().to_numpy()
    return s.with_values(np.maximum(smoothed, 0.0))


def smooth_injectors(ds: FieldDataset, window_steps: int) -> FieldDataset:
    """smooth_injection auf alle Injektionsphasen aller Injektoren."""

    def _fn(w: WellRecord, phase: str, s: RateSeries) -> RateSeries:
        return smooth_injection(s, window_steps) if w.role == "injector" else s

    return ds.map_series(_fn)


def apply_potential(
    ds: FieldDataset,
    tests: Sequence[ProductionTest],
    phases: Sequence[str] = PRODUCER_PHASES,
) -> tuple[FieldDataset, list[str]]:
    """
    Ersetzt die Produzentenraten durch das Potenzial aus den Produktionstests.
    Rückgabe: (Datensatz, Produzenten ohne Tests – unverändert übernommen)
    """
    by_well: dict[str, list[ProductionTest]] = {}
    for t in tests:
        by_well.setdefault(t.well_id, []).append(t)

    untested = [w.well_id for w in ds.producers if w.well_id not in by_well]
    if untested:
        log.warning("apply_potential: no production tests for %s, rates kept", ", ".join(untested))

    def _fn(w: WellRecord, phase: str, s: RateSeries) -> RateSeries:
        wt = by_well.get(w.well_id)
        if w.role != "producer" or not wt or phase not in phases:
            return s
        if not any(phase in t.rates for t in wt):
            return s
        return estimate_potential(s, wt, phase)

    return ds.map_series(_fn), untested
