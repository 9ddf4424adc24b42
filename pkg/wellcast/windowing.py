# wellcast/windowing.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd

from .dataset import FIELD, PHASE_ORDER, PRODUCER_PHASES, FieldDataset
from .errors import DataError, EmptyResultError, InsufficientHistoryError, SchemaError

log = logging.getLogger(__name__)

Scope = Literal["full_field", "per_well"]
SCOPES: tuple[str, ...] = ("full_field", "per_well")

# Standardabweichungen darunter gelten als konstant
ZERO_STD = 1e-12


# -----------------------------------------------------------------------------
# Domain types
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class WindowConfig:
    look_back: int
    look_forward: int = 1
    scope: Scope = "full_field"

    def __post_init__(self) -> None:
        if int(self.look_back) < 1:
            raise DataError(f"look_back muss >= 1 sein (ist {self.look_back})")
        if int(self.look_forward) < 1:
            raise DataError(f"look_forward muss >= 1 sein (ist {self.look_forward})")
        if self.scope not in SCOPES:
            raise DataError(f"unbekannter scope {self.scope!r}")


@dataclass(frozen=True, order=True)
class SeriesKey:
    well_id: str
    phase: str

    @property
    def is_output(self) -> bool:
        return self.phase in PRODUCER_PHASES


@dataclass(frozen=True)
class ColumnKey:
    """lag < 0: Eingang (t-i .. t-1), lag >= 0: Ausgang (t .. t+k-1)."""

    well_id: str
    phase: str
    lag: int

    @property
    def series(self) -> SeriesKey:
        return SeriesKey(self.well_id, self.phase)

    @property
    def label(self) -> str:
        if self.lag < 0:
            suffix = f"t{self.lag}"
        elif self.lag == 0:
            suffix = "t"
        else:
            suffix = f"t+{self.lag}"
        return f"{self.well_id}_{self.phase}_{suffix}"


@dataclass(frozen=True, eq=False)
class SupervisedSet:
    X: np.ndarray
    Y: np.ndarray
    x_keys: tuple[ColumnKey, ...]
    y_keys: tuple[ColumnKey, ...]
    row_origin_dates: tuple[date, ...]

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float).reshape(-1, len(self.x_keys))
        Y = np.array(self.Y, dtype=float).reshape(-1, len(self.y_keys))
        if X.shape[0] != Y.shape[0] or X.shape[0] != len(self.row_origin_dates):
            raise SchemaError("SupervisedSet: Zeilenzahlen von X, Y und Datumsliste passen nicht zusammen")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "x_keys", tuple(self.x_keys))
        object.__setattr__(self, "y_keys", tuple(self.y_keys))
        object.__setattr__(self, "row_origin_dates", tuple(self.row_origin_dates))

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    def take(self, start: int, stop: int) -> "SupervisedSet":
        return SupervisedSet(
            self.X[start:stop], self.Y[start:stop], self.x_keys, self.y_keys, self.row_origin_dates[start:stop]
        )

    def with_values(self, X: np.ndarray, Y: np.ndarray) -> "SupervisedSet":
        return SupervisedSet(X, Y, self.x_keys, self.y_keys, self.row_origin_dates)


@dataclass(frozen=True)
class SplitSpec:
    """
    Entweder Anteile (train/val/test, Summe 1) oder explizite Grenzen
    (val_start, test_start) als Datum des Zeilenursprungs.
    """

    train: float = 0.7
    val: float = 0.15
    test: float = 0.15
    val_start: Optional[date] = None
    test_start: Optional[date] = None

    def __post_init__(self) -> None:
        if self.uses_dates:
            if self.val_start is None or self.test_start is None:
                raise DataError("SplitSpec: val_start und test_start nur gemeinsam angeben")
            if self.test_start < self.val_start:
                raise DataError("SplitSpec: test_start liegt vor val_start")
            return
        for name in ("train", "val", "test"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise DataError(f"SplitSpec: {name}={v} außerhalb [0, 1]")
        if not math.isclose(self.train + self.val + self.test, 1.0, abs_tol=1e-9):
            raise DataError("SplitSpec: Anteile ergeben nicht 1")

    @property
    def uses_dates(self) -> bool:
        return self.val_start is not None or self.test_start is not None


@dataclass(frozen=True, eq=False)
class Normalizer:
    x_keys: tuple[ColumnKey, ...]
    y_keys: tuple[ColumnKey, ...]
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: np.ndarray
    y_std: np.ndarray

    def check_keys(self, x_keys: Sequence[ColumnKey], y_keys: Sequence[ColumnKey]) -> None:
        if tuple(x_keys) != self.x_keys or tuple(y_keys) != self.y_keys:
            raise SchemaError("Spaltenschlüssel passen nicht zum Normalizer")

    def normalize_x(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_std

    def normalize_y(self, Y: np.ndarray) -> np.ndarray:
        return (np.asarray(Y, dtype=float) - self.y_mean) / self.y_std

    def denormalize_y(self, Y: np.ndarray) -> np.ndarray:
        return np.asarray(Y, dtype=float) * self.y_std + self.y_mean

    def denormalize_x(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.x_std + self.x_mean


# -----------------------------------------------------------------------------
# Reihen
# -----------------------------------------------------------------------------
def series_keys(ds: FieldDataset, scope: Scope) -> tuple[SeriesKey, ...]:
    """Verfolgte Reihen in fester Reihenfolge: Bohrung (Datensatzreihenfolge) × Phase."""
    if scope == "full_field":
        return tuple(SeriesKey(FIELD, p) for p in PHASE_ORDER)
    return tuple(SeriesKey(w.well_id, p) for w in ds.wells for p in w.phases)


def series_matrix(ds: FieldDataset, scope: Scope) -> tuple[tuple[SeriesKey, ...], np.ndarray]:
    """T × S-Matrix der verfolgten Reihen."""
    keys = series_keys(ds, scope)
    if scope == "full_field":
        totals = ds.field_totals()
        cols = [totals[k.phase] for k in keys]
    else:
        cols = [ds.well(k.well_id).series[k.phase].values for k in keys]
    return keys, np.column_stack(cols)


def _lag_block(M: np.ndarray, origins: np.ndarray, s: int, offsets: np.ndarray) -> np.ndarray:
    return M[origins[:, None] + offsets[None, :], s]


def build_supervised_from_matrix(
    keys: Sequence[SeriesKey],
    M: np.ndarray,
    cfg: WindowConfig,
    dates: Sequence[date],
) -> SupervisedSet:
    i, k = int(cfg.look_back), int(cfg.look_forward)
    T = int(M.shape[0])
    if T < i + k:
        raise InsufficientHistoryError(i + k, T)

    origins = np.arange(i, T - k + 1)
    lags = np.arange(-i, 0)
    leads = np.arange(0, k)
    out_idx = [s for s, key in enumerate(keys) if key.is_output]

    X = np.hstack([_lag_block(M, origins, s, lags) for s in range(len(keys))])
    Y = np.hstack([_lag_block(M, origins, s, leads) for s in out_idx])
    x_keys = [ColumnKey(key.well_id, key.phase, int(lag)) for key in keys for lag in lags]
    y_keys = [ColumnKey(keys[s].well_id, keys[s].phase, int(lead)) for s in out_idx for lead in leads]
    row_dates = [dates[int(t)] for t in origins]
    return SupervisedSet(X, Y, tuple(x_keys), tuple(y_keys), tuple(row_dates))


def build_supervised(ds: FieldDataset, cfg: WindowConfig) -> SupervisedSet:
    """
    Umformung in Lag-Fenster: Zeile mit Ursprung t hat als Eingänge alle Reihen
    zu t-i..t-1 und als Ausgänge die Förderphasen zu t..t+k-1.
    Nur vollständige Zeilen (n_rows = T - i - k + 1).
    """
    keys, M = series_matrix(ds, cfg.scope)
    ss = build_supervised_from_matrix(keys, M, cfg, ds.dates)
    log.debug(
        "build_supervised: scope=%s i=%s k=%s rows=%s n_inputs=%s n_outputs=%s",
        cfg.scope, cfg.look_back, cfg.look_forward, ss.n_rows, len(ss.x_keys), len(ss.y_keys),
    )
    return ss


# -----------------------------------------------------------------------------
# Split
# -----------------------------------------------------------------------------
def chronological_split(ss: SupervisedSet, spec: SplitSpec) -> tuple[SupervisedSet, SupervisedSet, SupervisedSet]:
    """
    Zeitliche (nie zufällige) Aufteilung. Bei Anteilen: val/test abgerundet,
    der Rest geht ins Training.
    """
    n = ss.n_rows
    if spec.uses_dates:
        d = ss.row_origin_dates
        n_train = sum(1 for x in d if x < spec.val_start)  # type: ignore[operator]
        n_trval = sum(1 for x in d if x < spec.test_start)  # type: ignore[operator]
    else:
        n_val = int(math.floor(n * spec.val + 1e-9))
        n_test = int(math.floor(n * spec.test + 1e-9))
        n_train = n - n_val - n_test
        n_trval = n_train + n_val

    if n_train <= 0:
        raise EmptyResultError("Chronologischer Split ergibt ein leeres Trainingsset")
    return ss.take(0, n_train), ss.take(n_train, n_trval), ss.take(n_trval, n)


# -----------------------------------------------------------------------------
# Normalisierung
# -----------------------------------------------------------------------------
def _stats(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = A.mean(axis=0)
    std = A.std(axis=0)  # Populationsstreuung (1/n)
    std = np.where(std < ZERO_STD, 1.0, std)
    return mean, std


def fit_normalizer(train: SupervisedSet) -> Normalizer:
    """Mittelwert/Streuung je Spalte, ausschließlich aus den Trainingszeilen."""
    if train.n_rows == 0:
        raise EmptyResultError("Normalizer kann nicht aus leerem Trainingsset bestimmt werden")
    x_mean, x_std = _stats(train.X)
    y_mean, y_std = _stats(train.Y)
    return Normalizer(train.x_keys, train.y_keys, x_mean, x_std, y_mean, y_std)


def normalize(ss: SupervisedSet, nz: Normalizer) -> SupervisedSet:
    nz.check_keys(ss.x_keys, ss.y_keys)
    return ss.with_values(nz.normalize_x(ss.X), nz.normalize_y(ss.Y))


def denormalize(ss: SupervisedSet, nz: Normalizer) -> SupervisedSet:
    nz.check_keys(ss.x_keys, ss.y_keys)
    return ss.with_values(nz.denormalize_x(ss.X), nz.denormalize_y(ss.Y))


# -----------------------------------------------------------------------------
# Export
# -----------------------------------------------------------------------------
def supervised_frame(ss: SupervisedSet) -> pd.DataFrame:
    df = pd.DataFrame(
        np.hstack([ss.X, ss.Y]),
        columns=[k.label for k in ss.x_keys] + [k.label for k in ss.y_keys],
    )
    df.insert(0, "origin_date", [d.isoformat() for d in ss.row_origin_dates])
    return df


def export_supervised_csv(ss: SupervisedSet, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    supervised_frame(ss).to_csv(path, index=False, lineterminator="\n")
    return path
