# wellcast/__init__.py
from __future__ import annotations

from .dataset import FieldDataset, RateSeries, WellRecord
from .errors import ConfigError, DataError, NumericalError, WellcastError
from .forecaster import InjectionSchedule, forecast_recursive, run_rolling_evaluation
from .metrics import compute_metrics

__version__ = "0.1.0"

__all__ = [
    "FieldDataset",
    "RateSeries",
    "WellRecord",
    "WellcastError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "InjectionSchedule",
    "forecast_recursive",
    "run_rolling_evaluation",
    "compute_metrics",
    "__version__",
]
