# wellcast/services/plots_svg.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Mapping, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd

from ..dataset import FIELD, PRODUCER_PHASES, FieldDataset
from ..forecaster import ForecastResult
from ..gridsearch import AXES, GridReport
from ..windowing import series_matrix

log = logging.getLogger(__name__)

Marker = Literal["circle", "x", "none"]

WIDTH, HEIGHT = 720, 360
PAD_L, PAD_R, PAD_T, PAD_B = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass(frozen=True)
class ChartSeries:
    name: str
    x: Sequence[float]
    y: Sequence[float]
    marker: Marker = "none"
    color: str = PALETTE[0]


def _f(v: float) -> str:
    return f"{v:.2f}"


def _svg(body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def _marker(kind: Marker, x: float, y: float, color: str) -> str:
    if kind == "circle":
        return f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="none" stroke="{color}"/>'
    if kind == "x":
        d = 3.0
        return (
            f'<path d="M{_f(x - d)},{_f(y - d)} L{_f(x + d)},{_f(y + d)} '
            f'M{_f(x - d)},{_f(y + d)} L{_f(x + d)},{_f(y - d)}" stroke="{color}"/>'
        )
    return ""


# -----------------------------------------------------------------------------
# Liniendiagramm
# -----------------------------------------------------------------------------
def line_chart_svg(
    title: str,
    series: Sequence[ChartSeries],
    *,
    x_label: str = "",
    y_label: str = "",
    x_ticks: Optional[Sequence[tuple[float, str]]] = None,
) -> str:
    xs = np.concatenate([np.asarray(s.x, dtype=float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s.y, dtype=float) for s in series]) if series else np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = WIDTH - PAD_L - PAD_R, HEIGHT - PAD_T - PAD_B

    def sx(v: float) -> float:
        return PAD_L + (v - x0) / (x1 - x0) * pw

    def sy(v: float) -> float:
        return PAD_T + ph - (v - y0) / (y1 - y0) * ph

    body = [
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{PAD_L}" y1="{PAD_T + ph}" x2="{PAD_L + pw}" y2="{PAD_T + ph}" stroke="black"/>',
        f'<line x1="{PAD_L}" y1="{PAD_T}" x2="{PAD_L}" y2="{PAD_T + ph}" stroke="black"/>',
    ]
    for k in range(5):
        v = y0 + (y1 - y0) * k / 4
        body.append(f'<text x="{PAD_L - 5}" y="{_f(sy(v) + 4)}" text-anchor="end">{v:.4g}</text>')
    for v, label in x_ticks or []:
        body.append(f'<text x="{_f(sx(v))}" y="{PAD_T + ph + 15}" text-anchor="middle">{escape(label)}</text>')
    if x_label:
        body.append(f'<text x="{PAD_L + pw / 2}" y="{HEIGHT - 8}" text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        body.append(
            f'<text x="14" y="{PAD_T + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {PAD_T + ph / 2})">'
            f"{escape(y_label)}</text>"
        )

    for n, s in enumerate(series):
        pts = [(sx(float(a)), sy(float(b))) for a, b in zip(s.x, s.y)]
        if not pts:
            continue
        path = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
        body.append(f'<polyline points="{path}" fill="none" stroke="{s.color}"/>')
        body.extend(_marker(s.marker, a, b, s.color) for a, b in pts if s.marker != "none")
        ly = PAD_T + 12 * n
        body.append(f'<text x="{PAD_L + pw - 5}" y="{ly}" text-anchor="end" fill="{s.color}">{escape(s.name)}</text>')
    return _svg(body)


# -----------------------------------------------------------------------------
# Prognosediagramme
# -----------------------------------------------------------------------------
def forecast_plot_frame(history: FieldDataset, result: ForecastResult, phase: str, n_history: Optional[int] = None) -> pd.DataFrame:
    """Plotdaten einer Phase (Summe über alle verfolgten Förderreihen): date,kind,value."""
    cols = [j for j, k in enumerate(result.keys) if k.phase == phase]
    keys, M = series_matrix(history, "per_well" if any(k.well_id != FIELD for k in result.keys) else "full_field")
    hist_cols = [keys.index(result.keys[j]) for j in cols]
    hist = M[:, hist_cols].sum(axis=1)
    start = 0 if n_history is None else max(0, history.n_steps - int(n_history))

    records = [
        {"date": history.date_at(t).isoformat(), "kind": "history", "value": float(hist[t])}
        for t in range(start, history.n_steps)
    ]
    pred = result.predicted[:, cols].sum(axis=1)
    records += [{"date": d.isoformat(), "kind": "forecast", "value": float(v)} for d, v in zip(result.dates, pred)]
    if result.actual is not None:
        act = result.actual[:, cols].sum(axis=1)
        records += [{"date": d.isoformat(), "kind": "actual", "value": float(v)} for d, v in zip(result.dates, act)]
    return pd.DataFrame.from_records(records, columns=["date", "kind", "value"])


def forecast_chart_svg(frame: pd.DataFrame, title: str) -> str:
    dates = pd.to_datetime(frame["date"])
    t0 = dates.min()
    x = (dates - t0).dt.days.astype(float).to_numpy()
    styles = {"history": ("circle", PALETTE[0]), "forecast": ("x", PALETTE[1]), "actual": ("none", PALETTE[2])}
    series = []
    for kind, (marker, color) in styles.items():
        m = (frame["kind"] == kind).to_numpy()
        if m.any():
            series.append(ChartSeries(kind, x[m], frame["value"].to_numpy()[m], marker, color))  # type: ignore[arg-type]
    ticks = [(float(x[i]), frame["date"].iloc[i]) for i in np.linspace(0, len(x) - 1, 4).astype(int)] if len(x) else []
    return line_chart_svg(title, series, x_label="Datum", y_label="Rate [m³/d]", x_ticks=ticks)


def emit_forecast_plots(
    history: Optional[FieldDataset],
    result: Optional[ForecastResult],
    out_dir: Path | str,
    prefix: str = "forecast",
    n_history: Optional[int] = None,
) -> list[Path]:
    """Je Förderphase ein SVG plus Plotdaten-CSV."""
    if history is None or result is None:
        log.warning("emit_plots: forecast artifact missing, skipped")
        return []
    out_dir = Path(out_dir)
    paths: list[Path] = []
    for phase in PRODUCER_PHASES:
        if not any(k.phase == phase for k in result.keys):
            continue
        frame = forecast_plot_frame(history, result, phase, n_history)
        csv_path = out_dir / f"{prefix}_{phase}.csv"
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_path, index=False, lineterminator="\n")
        svg_path = _write_text(out_dir / f"{prefix}_{phase}.svg", forecast_chart_svg(frame, f"{result.descriptor}: {phase}"))
        paths += [svg_path, csv_path]
    log.info("emit_plots: forecast charts=%s", len(paths) // 2)
    return paths


# -----------------------------------------------------------------------------
# Radar
# -----------------------------------------------------------------------------
def radar_vertices(values: Mapping[str, float], radius: float = 120.0, cx: float = 180.0, cy: float = 180.0) -> list[tuple[str, float, float]]:
    """Polygonecken: Achse j bei Winkel 2πj/m (0 = oben, im Uhrzeigersinn), Abstand = Wert·radius."""
    names = list(values)
    out = []
    for j, name in enumerate(names):
        angle = 2.0 * math.pi * j / len(names)
        r = float(values[name]) * radius
        out.append((name, cx + r * math.sin(angle), cy - r * math.cos(angle)))
    return out


def radar_chart_svg(normalized: Mapping[str, Mapping[str, float]], title: str = "Fehlermetriken (normiert)") -> str:
    size, radius = 360, 120.0
    c = size / 2
    first = next(iter(normalized.values()))
    axes = radar_vertices({m: 1.0 for m in first}, radius, c, c)
    body = [f'<text x="{c}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    for name, x, y in axes:
        body.append(f'<line x1="{c}" y1="{c}" x2="{_f(x)}" y2="{_f(y)}" stroke="#999"/>')
        body.append(f'<text x="{_f(x)}" y="{_f(y - 4)}" text-anchor="middle">{escape(name)}</text>')
    for n, (est, vals) in enumerate(normalized.items()):
        color = PALETTE[n % len(PALETTE)]
        pts = " ".join(f"{_f(x)},{_f(y)}" for _, x, y in radar_vertices(vals, radius, c, c))
        body.append(f'<polygon points="{pts}" fill="none" stroke="{color}"/>')
        body.append(f'<text x="10" y="{size - 10 - 12 * n}" fill="{color}">{escape(est)}</text>')
    return _svg(body, size, size)


def emit_radar_plot(normalized: Optional[Mapping[str, Mapping[str, float]]], out_dir: Path | str) -> list[Path]:
    if not normalized:
        log.warning("emit_plots: radar input empty, skipped")
        return []
    out_dir = Path(out_dir)
    rows = [{"estimator": e, "metric": m, "value": float(v)} for e, vals in normalized.items() for m, v in vals.items()]
    csv_path = out_dir / "radar.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame.from_records(rows, columns=["estimator", "metric", "value"]).to_csv(csv_path, index=False, lineterminator="\n")
    return [_write_text(out_dir / "radar.svg", radar_chart_svg(normalized)), csv_path]


# -----------------------------------------------------------------------------
# Randmittel des Grid-Reports
# -----------------------------------------------------------------------------
def emit_grid_plots(report: Optional[GridReport], out_dir: Path | str, metric: str = "smape") -> list[Path]:
    """Je Achse mit mehr als einem Wert ein Diagramm der Randmittel (plus CSV)."""
    if report is None or not report.successful:
        log.warning("emit_plots: grid report empty, no charts")
        return []
    out_dir = Path(out_dir)
    paths: list[Path] = []
    for axis in AXES:
        mm = report.marginal_means(axis)
        if len(mm) < 2:
            continue
        csv_path = out_dir / f"marginal_{axis}.csv"
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        mm.to_csv(csv_path, index=False, lineterminator="\n")
        x = np.arange(len(mm), dtype=float)
        ticks = [(float(i), str(v)) for i, v in zip(x, mm[axis])]
        svg = line_chart_svg(
            f"Mittlere {metric.upper()} je {axis}",
            [ChartSeries(metric, x, mm[metric].to_numpy(dtype=float), "circle", PALETTE[0])],
            x_label=axis,
            y_label=metric,
            x_ticks=ticks,
        )
        paths += [_write_text(out_dir / f"marginal_{axis}.svg", svg), csv_path]
    log.info("emit_plots: grid charts=%s", len(paths) // 2)
    return paths
