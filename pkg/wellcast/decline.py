# wellcast/decline.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .dataset import RateSeries
from .errors import DataError

log = logging.getLogger(__name__)

# darunter wird exponentiell gerechnet (hyperbolische Form numerisch instabil)
B_EXPONENTIAL = 1e-3
# d_i darunter gilt als "kein Abfall"
D_FLAT = 1e-6

_B_GRID = np.linspace(0.0, 1.0, 21)


@dataclass(frozen=True)
class ArpsParams:
    q_i: float
    d_i: float
    b: float

    def __post_init__(self) -> None:
        if not self.q_i > 0:
            raise DataError(f"Arps: q_i muss > 0 sein (ist {self.q_i})")
        if self.d_i < 0:
            raise DataError(f"Arps: d_i muss >= 0 sein (ist {self.d_i})")
        if not (0.0 <= self.b <= 1.0):
            raise DataError(f"Arps: b muss in [0, 1] liegen (ist {self.b})")


@dataclass(frozen=True)
class ArpsFit:
    params: ArpsParams
    residual_norm: float
    warning: bool = False


def _rate(q_i: float, d_i: float, b: float, t: np.ndarray) -> np.ndarray:
    if b <= B_EXPONENTIAL:
        return q_i * np.exp(-d_i * t)
    return q_i / np.power(1.0 + b * d_i * t, 1.0 / b)


def arps_rate(p: ArpsParams, t: float | np.ndarray) -> float | np.ndarray:
    """q(t) = q_i / (1 + b·d_i·t)^(1/b); für b <= 1e-3 q_i·exp(-d_i·t); b = 1 harmonisch."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise DataError("arps_rate: t muss >= 0 sein")
    out = _rate(p.q_i, p.d_i, p.b, ta)
    return float(out) if np.ndim(out) == 0 else out


def forecast_arps(p: ArpsParams, start_step: int, H: int, start_date: date, step_days: int = 1) -> RateSeries:
    """
    arps_rate für die Schritte start_step .. start_step+H-1.
    start_date ist das Datum von Schritt 0 der Abfallkurve.
    """
    if H < 1:
        raise DataError(f"Horizont muss >= 1 sein (ist {H})")
    steps = np.arange(int(start_step), int(start_step) + int(H), dtype=float)
    first = RateSeries(start_date, step_days, [1.0]).date_at(int(start_step))
    return RateSeries(first, step_days, np.asarray(arps_rate(p, steps), dtype=float).reshape(-1))


# -----------------------------------------------------------------------------
# Anpassung
# -----------------------------------------------------------------------------
def _fit_for_b(b: float, t: np.ndarray, q: np.ndarray, x0: np.ndarray) -> tuple[np.ndarray, float]:
    """Innere Gauß-Newton-artige Anpassung von (q_i, d_i) bei festem b."""

    def resid(x: np.ndarray) -> np.ndarray:
        return _rate(x[0], x[1], b, t) - q

    def jac(x: np.ndarray) -> np.ndarray:
        q_i, d_i = x
        if b <= B_EXPONENTIAL:
            f = np.exp(-d_i * t)
            df = -t * f
        else:
            base = 1.0 + b * d_i * t
            f = np.power(base, -1.0 / b)
            df = -t * np.power(base, -1.0 / b - 1.0)
        return np.column_stack([f, q_i * df])

    res = least_squares(
        resid,
        x0,
        jac=jac,
        bounds=([1e-12, 0.0], [np.inf, np.inf]),
        method="trf",
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
    )
    return res.x, float(np.sum(res.fun**2))


def fit_arps(series: RateSeries) -> ArpsFit:
    """
    Kleinste Quadrate Σ(q_obs - q(t))². Außen Suche über b in [0, 1]
    (Raster + beschränkte Goldener-Schnitt/Brent-Suche), innen (q_i, d_i).
    Nicht abfallende Reihen: d_i ≈ 0 und warning=True.
    """
    q = np.asarray(series.values, dtype=float)
    if q.size < 3:
        raise DataError("fit_arps: mindestens 3 Punkte erforderlich")
    if np.any(q <= 0):
        raise DataError("fit_arps: Raten müssen strikt positiv sein")
    t = np.arange(q.size, dtype=float)

    # Startwert aus log-linearer Regression
    slope, intercept = np.polyfit(t, np.log(q), 1)
    x0 = np.array([float(np.exp(intercept)), max(float(-slope), 0.0)])

    cache: dict[float, tuple[np.ndarray, float]] = {}

    def sse(b: float) -> float:
        b = float(min(max(b, 0.0), 1.0))
        if b not in cache:
            cache[b] = _fit_for_b(b, t, q, x0)
        return cache[b][1]

    grid = [sse(b) for b in _B_GRID]
    k = int(np.argmin(grid))
    lo = _B_GRID[max(k - 1, 0)]
    hi = _B_GRID[min(k + 1, len(_B_GRID) - 1)]
    res = minimize_scalar(sse, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8})

    candidates = sorted(cache.items(), key=lambda kv: (kv[1][1], kv[0]))
    best_b, (x, best_sse) = candidates[0]
    # exponentieller Ast bei Gleichstand bevorzugt
    if cache[0.0][1] <= best_sse * (1.0 + 1e-9) + 1e-18:
        best_b, (x, best_sse) = 0.0, cache[0.0]

    params = ArpsParams(q_i=float(x[0]), d_i=float(x[1]), b=float(best_b))
    warning = params.d_i < D_FLAT
    if warning:
        log.warning("fit_arps: non-decaying series, d_i=%.3g", params.d_i)
    log.debug("fit_arps: q_i=%.6g d_i=%.6g b=%.4g sse=%.6g brent_x=%.4g", params.q_i, params.d_i, params.b, best_sse, res.x)
    return ArpsFit(params, float(np.sqrt(best_sse)), warning)
