# tests/conftest.py
from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import pytest

from wellcast.dataset import FieldDataset, RateSeries, WellRecord
from wellcast.decline import ArpsParams
from wellcast.synth import SynthInjector, SynthSpec, generate_field

START = date(2020, 1, 1)


def make_dataset(
    producers: Mapping[str, Mapping[str, Sequence[float]]],
    injectors: Mapping[str, Mapping[str, Sequence[float]]] | None = None,
    start: date = START,
    step_days: int = 1,
) -> FieldDataset:
    """Kleiner Datensatz aus Listen; alle Reihen müssen gleich lang sein."""
    wells = []
    n = None
    for role, group in (("producer", producers), ("injector", injectors or {})):
        for wid, phases in group.items():
            series = {ph: RateSeries(start, step_days, np.asarray(v, dtype=float)) for ph, v in phases.items()}
            n = len(next(iter(series.values())))
            wells.append(WellRecord(wid, role, series))
    assert n is not None
    return FieldDataset(tuple(wells), start, step_days, n)


@pytest.fixture
def dataset_factory() -> Callable[..., FieldDataset]:
    return make_dataset


@pytest.fixture
def ramp_dataset() -> FieldDataset:
    """Drei Produzenten, nur Öl: P1=10..100, P2=130..220, P3=250..340."""
    return make_dataset(
        {
            "P1": {"oil": np.arange(10, 101, 10)},
            "P2": {"oil": np.arange(130, 221, 10)},
            "P3": {"oil": np.arange(250, 341, 10)},
        }
    )


def linear_field_spec(n_steps: int = 128, noise: float = 0.0, nonlinearity: float = 0.0, seed: int = 7) -> SynthSpec:
    """
    Lineares Feld in 10-Tage-Schritten: gleiche Abfallrate, b = 0, gleiche
    Kopplung und Verzögerung (2 Schritte), konstanter Wasseranteil.
    Injektionswechsel liegen sowohl in den ersten 110 Schritten als auch danach.
    """
    water = [
        SynthInjector({"water_inj": ((0, 1000.0), (35 + 3 * j, 1400.0), (75 + 2 * j, 800.0), (112 + j, 1200.0))})
        for j in range(3)
    ]
    gas = [
        SynthInjector({"gas_inj": ((0, 9000.0 + 500 * j), (25 + 4 * j, 14000.0), (60 + 3 * j, 10000.0), (95, 12500.0), (116 + j, 8000.0))})
        for j in range(4)
    ]
    arps = tuple(ArpsParams(q_i=800.0 + 100.0 * p, d_i=5e-4, b=0.0) for p in range(6))
    gains = np.full((6, 7), 0.01)
    gas_gains = np.zeros((6, 7))
    gas_gains[:, 3:] = 0.05
    return SynthSpec(
        arps=arps,
        injectors=tuple(water + gas),
        gains=gains,
        lags=np.full((6, 7), 2),
        gas_gains=gas_gains,
        n_steps=n_steps,
        step_days=10,
        start_date=date(2016, 1, 1),
        water_cut0=0.2,
        water_cut_growth=0.0,
        noise=noise,
        nonlinearity=nonlinearity,
        seed=seed,
    )


@pytest.fixture
def linear_field() -> FieldDataset:
    return generate_field(linear_field_spec())


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
