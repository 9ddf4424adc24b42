# tests/test_report_docx.py
from __future__ import annotations

import io
import time
import zipfile

import pytest

pytest.importorskip("docx")

from wellcast.services.report_docx import ReportContext, render_report_docx, write_report_docx  # noqa: E402

CTX = ReportContext(title="Laufbericht", facts=(("Schätzer", "ols"), ("Seed", "42")))


def test_zip_entries_carry_fixed_dates():
    with zipfile.ZipFile(io.BytesIO(render_report_docx(CTX))) as zf:
        names = zf.namelist()
        assert "word/document.xml" in names
        assert {info.date_time for info in zf.infolist()} == {(2000, 1, 1, 0, 0, 0)}
        assert b"Laufbericht" in zf.read("word/document.xml")


def test_render_is_byte_identical_across_clock_changes(monkeypatch):
    first = render_report_docx(CTX)
    later = time.time() + 3 * 86400
    monkeypatch.setattr(time, "time", lambda: later)
    assert render_report_docx(CTX) == first


def test_write_report_docx(tmp_path):
    path = write_report_docx(CTX, tmp_path / "sub" / "report.docx")
    assert path.read_bytes() == render_report_docx(CTX)
