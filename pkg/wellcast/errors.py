# wellcast/errors.py
from __future__ import annotations

from datetime import date
from typing import Iterable, Optional


class WellcastError(Exception):
    """
    Basisklasse aller fachlichen Fehler.
    exit_code wird von der CLI 1:1 als Prozess-Exitcode verwendet.
    """

    exit_code: int = 1


# -----------------------------------------------------------------------------
# Konfiguration (Exit 2)
# -----------------------------------------------------------------------------
class ConfigError(WellcastError):
    exit_code = 2

    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"{key}: {message}")


# -----------------------------------------------------------------------------
# Daten (Exit 3)
# -----------------------------------------------------------------------------
class DataError(WellcastError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, path: str, line: int, message: str) -> None:
        self.path = path
        self.line = line
        super().__init__(f"{path}, Zeile {line}: {message}")


class ConflictError(DataError):
    pass


class GridError(DataError):
    def __init__(self, well_id: str, missing_date: object) -> None:
        self.well_id = well_id
        self.missing_date = missing_date
        super().__init__(f"Lücke im Datumsraster: Bohrung {well_id}, fehlender Tag {missing_date}")


class EmptyResultError(DataError):
    pass


class InertWellError(DataError):
    def __init__(self, wells: Iterable[str], since: Optional[date] = None) -> None:
        self.wells = sorted(wells)
        self.since = since
        when = "" if since is None else f" ab {since}"
        super().__init__(f"Bohrungen ohne jede Förderung/Injektion{when}: {', '.join(self.wells)}")


class InsufficientHistoryError(DataError):
    def __init__(self, required: int, available: int, what: str = "Schritte") -> None:
        self.required = int(required)
        self.available = int(available)
        super().__init__(f"Zu wenig Historie: benötigt {self.required} {what}, vorhanden {self.available}")


class SchemaError(DataError):
    pass


class ScheduleExhaustedError(DataError):
    def __init__(self, source: str, step_index: int, length: int) -> None:
        self.source = source
        self.step_index = int(step_index)
        self.length = int(length)
        super().__init__(
            f"Injektionsplan {source} erschöpft: Schritt {self.step_index} angefordert, "
            f"Plan enthält nur {self.length} Schritte"
        )


class PotentialError(DataError):
    pass


# -----------------------------------------------------------------------------
# Numerik (Exit 4)
# -----------------------------------------------------------------------------
class NumericalError(WellcastError):
    exit_code = 4


class DivergenceError(NumericalError):
    def __init__(self, epoch: int, loss: float) -> None:
        self.epoch = int(epoch)
        self.loss = loss
        super().__init__(f"MLP-Training divergiert in Epoche {self.epoch} (loss={loss})")
