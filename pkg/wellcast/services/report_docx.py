# wellcast/services/report_docx.py
from __future__ import annotations

import io
import logging
import zipfile
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..decline import ArpsFit
from ..forecaster import RollingReport
from ..gridsearch import GridReport
from ..metrics import METRIC_NAMES

log = logging.getLogger(__name__)

# feste Dokumenteigenschaften (Erstellt/Geändert) und feste Zeitstempel der ZIP-Einträge
_DOC_TIMESTAMP = datetime(2000, 1, 1)
_ZIP_DATE_TIME = (2000, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class ReportContext:
    title: str
    facts: Sequence[tuple[str, str]] = ()
    rolling: Optional[RollingReport] = None
    grid: Optional[GridReport] = None
    arps: Mapping[str, ArpsFit] = field(default_factory=dict)


def _fmt(v: object) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _set_cell_text(cell, text: str, *, align, font_size_pt: int) -> None:
    from docx.shared import Pt

    cell.text = text or ""
    for p in cell.paragraphs:
        p.alignment = align
        for run in p.runs:
            run.font.size = Pt(font_size_pt)


def _add_table(doc, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    """Kopfzeile fett, Zahlen rechtsbündig, 9 pt."""
    from docx.enum.table import WD_TABLE_ALIGNMENT
    from docx.enum.text import WD_ALIGN_PARAGRAPH

    tbl = doc.add_table(rows=len(rows) + 1, cols=len(header))
    tbl.style = "Table Grid"
    tbl.alignment = WD_TABLE_ALIGNMENT.CENTER

    for ci, h in enumerate(header):
        cell = tbl.cell(0, ci)
        _set_cell_text(cell, h, align=WD_ALIGN_PARAGRAPH.CENTER, font_size_pt=9)
        for run in cell.paragraphs[0].runs:
            run.font.bold = True

    for ri, row in enumerate(rows, start=1):
        for ci, v in enumerate(row):
            align = WD_ALIGN_PARAGRAPH.RIGHT if isinstance(v, (int, float)) else WD_ALIGN_PARAGRAPH.LEFT
            _set_cell_text(tbl.cell(ri, ci), _fmt(v), align=align, font_size_pt=9)


def _normalize_zip(data: bytes) -> bytes:
    """Gleiche Einträge, gleiche Reihenfolge, aber feste Datumsangaben."""
    out = io.BytesIO()
    with zipfile.ZipFile(io.BytesIO(data)) as src, zipfile.ZipFile(out, "w", zipfile.ZIP_DEFLATED) as dst:
        for info in src.infolist():
            entry = zipfile.ZipInfo(info.filename, date_time=_ZIP_DATE_TIME)
            entry.compress_type = zipfile.ZIP_DEFLATED
            entry.external_attr = info.external_attr
            dst.writestr(entry, src.read(info.filename))
    return out.getvalue()


def render_report_docx(ctx: ReportContext) -> bytes:
    """
    Laufbericht:
      - Eckdaten des Laufs
      - rollierende Auswertung (je Runde + Mittelwerte)
      - beste Grid-Trials je Metrik
      - Arps-Anpassungen je Produzent
    """
    from docx import Document

    doc = Document()
    doc.core_properties.created = _DOC_TIMESTAMP
    doc.core_properties.modified = _DOC_TIMESTAMP
    doc.core_properties.title = ctx.title
    doc.add_heading(ctx.title, level=1)

    if ctx.facts:
        _add_table(doc, ["Eintrag", "Wert"], [(k, v) for k, v in ctx.facts])

    if ctx.rolling is not None:
        r = ctx.rolling
        doc.add_heading(f"Rollierende Auswertung: {r.descriptor}", level=2)
        doc.add_paragraph(f"{len(r.rounds)} Runden, Fehler im Raum '{r.score_space}'.")
        rows = [
            [x.index, x.origin_date.isoformat(), x.train_rows, *(x.metrics.metric(m) for m in METRIC_NAMES)]
            for x in r.rounds
        ]
        rows.append(["Mittel", "", "", *(r.aggregate[m] for m in METRIC_NAMES)])
        _add_table(doc, ["Runde", "Ursprung", "Zeilen", *(m.upper() for m in METRIC_NAMES)], rows)

    if ctx.grid is not None:
        g = ctx.grid
        doc.add_heading("Grid-Suche", level=2)
        doc.add_paragraph(f"{len(g.trials)} Trials, davon {len(g.failed)} fehlgeschlagen.")
        rows = []
        for m, t in g.best().items():
            if t is None:
                rows.append([m.upper(), "-", None])
            else:
                rows.append([m.upper(), t.config.key, t.metrics[m] if t.metrics else None])
        _add_table(doc, ["Metrik", "Beste Konfiguration", "Wert"], rows)

    if ctx.arps:
        doc.add_heading("Arps-Abfallkurven", level=2)
        rows = [
            [wid, f.params.q_i, f.params.d_i, f.params.b, f.residual_norm, "ja" if f.warning else ""]
            for wid, f in ctx.arps.items()
        ]
        _add_table(doc, ["Bohrung", "q_i", "d_i", "b", "Residuum", "Warnung"], rows)

    bio = io.BytesIO()
    doc.save(bio)
    return _normalize_zip(bio.getvalue())


def write_report_docx(ctx: ReportContext, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(render_report_docx(ctx))
    log.info("write_report_docx: path=%s", path)
    return path
