# wellcast/synth.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

import numpy as np

from .dataset import INJECTOR_PHASES, FieldDataset, RateSeries, WellRecord
from .decline import ArpsParams, arps_rate
from .errors import DataError

log = logging.getLogger(__name__)

WATER_CUT_MAX = 0.95

# (Startschritt, Rate) – Rate gilt ab Startschritt bis zum nächsten Wechsel
ChangePoint = tuple[int, float]


@dataclass(frozen=True)
class SynthInjector:
    """Injektor mit stückweise konstantem Programm je Phase (WAG = beide Phasen)."""

    program: Mapping[str, Sequence[ChangePoint]]

    def __post_init__(self) -> None:
        if not self.program:
            raise DataError("SynthInjector ohne Programm")
        for ph, points in self.program.items():
            if ph not in INJECTOR_PHASES:
                raise DataError(f"SynthInjector: unbekannte Phase {ph!r}")
            steps = [int(s) for s, _ in points]
            if steps != sorted(steps) or len(set(steps)) != len(steps):
                raise DataError(f"SynthInjector: Wechselpunkte für {ph} nicht streng aufsteigend")
            if any(s < 0 or not np.isfinite(r) or r < 0 for s, r in points):
                raise DataError(f"SynthInjector: ungültiger Wechselpunkt für {ph}")
        ordered = {ph: tuple((int(s), float(r)) for s, r in self.program[ph]) for ph in INJECTOR_PHASES if ph in self.program}
        object.__setattr__(self, "program", ordered)

    @property
    def phases(self) -> tuple[str, ...]:
        return tuple(self.program)

    def rates(self, phase: str, n_steps: int) -> np.ndarray:
        out = np.zeros(n_steps)
        for s, r in self.program.get(phase, ()):
            if s < n_steps:
                out[s:] = r
        return out


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """
    Synthetisches Feld. Kopplungen und Verzögerungen als Matrizen
    (Produzent × Injektor), Verzögerungen in Schritten. Arps-Zeit in Tagen.
    """

    arps: tuple[ArpsParams, ...]
    injectors: tuple[SynthInjector, ...]
    gains: np.ndarray
    lags: np.ndarray
    gas_gains: Optional[np.ndarray] = None
    n_steps: int = 2190
    step_days: int = 1
    start_date: date = date(2015, 1, 1)
    water_cut0: float = 0.1
    water_cut_growth: float = 0.0  # logistische Rate je Tag, 0 = konstant
    gor: float = 150.0
    noise: float = 0.0  # relative Standardabweichung
    nonlinearity: float = 0.0  # Sättigung der Ölkopplung, 0 = linear
    seed: int = 42
    producer_prefix: str = "P"
    injector_prefix: str = "I"

    def __post_init__(self) -> None:
        n_p, n_i = len(self.arps), len(self.injectors)
        if n_p < 1:
            raise DataError("SynthSpec: mindestens ein Produzent")
        object.__setattr__(self, "arps", tuple(self.arps))
        object.__setattr__(self, "injectors", tuple(self.injectors))
        gains = np.array(self.gains, dtype=float).reshape(n_p, n_i)
        lags = np.array(self.lags, dtype=int).reshape(n_p, n_i)
        gas_gains = np.zeros((n_p, n_i)) if self.gas_gains is None else np.array(self.gas_gains, dtype=float).reshape(n_p, n_i)
        if not (np.all(np.isfinite(gains)) and np.all(np.isfinite(gas_gains))):
            raise DataError("SynthSpec: Kopplungen müssen endlich sein")
        if np.any(lags < 0):
            raise DataError("SynthSpec: Verzögerungen müssen >= 0 sein")
        if self.noise < 0:
            raise DataError("SynthSpec: noise muss >= 0 sein")
        if self.n_steps < 1 or self.step_days < 1:
            raise DataError("SynthSpec: n_steps und step_days müssen >= 1 sein")
        if not (0.0 <= self.water_cut0 < WATER_CUT_MAX):
            raise DataError(f"SynthSpec: water_cut0 muss in [0, {WATER_CUT_MAX}) liegen")
        for a in (gains, lags, gas_gains):
            a.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "gas_gains", gas_gains)

    @property
    def n_producers(self) -> int:
        return len(self.arps)

    @property
    def n_injectors(self) -> int:
        return len(self.injectors)


# -----------------------------------------------------------------------------
# Generator
# -----------------------------------------------------------------------------
def _lagged(x: np.ndarray, lag: int) -> np.ndarray:
    """x(t - lag), vor Beginn 0."""
    if lag == 0:
        return x
    out = np.zeros_like(x)
    out[lag:] = x[:-lag]
    return out


def water_cut(spec: SynthSpec, t_days: np.ndarray) -> np.ndarray:
    """Logistischer Anstieg von water_cut0 gegen WATER_CUT_MAX."""
    wc0 = spec.water_cut0
    if wc0 == 0.0 or spec.water_cut_growth == 0.0:
        return np.full(t_days.shape, wc0)
    k = WATER_CUT_MAX / wc0 - 1.0
    return WATER_CUT_MAX / (1.0 + k * np.exp(-spec.water_cut_growth * t_days))


def generate_field(spec: SynthSpec) -> FieldDataset:
    """
    Öl  = Arps-Basis + Σ_j g[p,j]·inj_j(t - lag[p,j]) + Rauschen, bei 0 gekappt
    Wasser = wc/(1 - wc)·Öl
    Gas = GOR·Öl + Σ_j g_gas[p,j]·gasinj_j(t - lag[p,j])
    inj_j ist die Summe aller Phasen des Injektors. Deterministisch je seed.
    """
    n, step = int(spec.n_steps), int(spec.step_days)
    t_days = np.arange(n, dtype=float) * step
    rng = np.random.default_rng(spec.seed)
    # Rauschen vorab ziehen: unabhängig vom Injektionsprogramm
    eps = rng.standard_normal((spec.n_producers, 3, n))

    inj = {(j, ph): inj_.rates(ph, n) for j, inj_ in enumerate(spec.injectors) for ph in inj_.phases}
    inj_total = [sum((inj[(j, ph)] for ph in inj_.phases), np.zeros(n)) for j, inj_ in enumerate(spec.injectors)]
    inj_gas = [inj.get((j, "gas_inj"), np.zeros(n)) for j in range(spec.n_injectors)]
    wc = water_cut(spec, t_days)

    wells: list[WellRecord] = []
    for p, arps in enumerate(spec.arps):
        base = np.asarray(arps_rate(arps, t_days), dtype=float)
        coupling = np.zeros(n)
        gas_coupling = np.zeros(n)
        for j in range(spec.n_injectors):
            lag = int(spec.lags[p, j])
            x = _lagged(inj_total[j], lag)
            if spec.nonlinearity:
                x = x / (1.0 + spec.nonlinearity * x / 1000.0)
            coupling += spec.gains[p, j] * x
            gas_coupling += spec.gas_gains[p, j] * _lagged(inj_gas[j], lag)

        oil = np.maximum((base + coupling) * (1.0 + spec.noise * eps[p, 0]), 0.0)
        water = np.maximum(wc / (1.0 - wc) * oil * (1.0 + spec.noise * eps[p, 1]), 0.0)
        gas = np.maximum((spec.gor * oil + gas_coupling) * (1.0 + spec.noise * eps[p, 2]), 0.0)

        series = {
            ph: RateSeries(spec.start_date, step, v) for ph, v in (("oil", oil), ("gas", gas), ("water", water))
        }
        wells.append(WellRecord(f"{spec.producer_prefix}{p + 1}", "producer", series))

    for j, inj_ in enumerate(spec.injectors):
        series = {ph: RateSeries(spec.start_date, step, inj[(j, ph)]) for ph in inj_.phases}
        wells.append(WellRecord(f"{spec.injector_prefix}{j + 1}", "injector", series))

    ds = FieldDataset(tuple(wells), spec.start_date, step, n)
    log.debug(
        "generate_field: producers=%s injectors=%s n_steps=%s step_days=%s seed=%s",
        spec.n_producers, spec.n_injectors, n, step, spec.seed,
    )
    return ds


# -----------------------------------------------------------------------------
# Standardfeld
# -----------------------------------------------------------------------------
def _program(rng: np.random.Generator, n_steps: int, first: int, low: float, high: float) -> tuple[ChangePoint, ...]:
    """Strategiewechsel alle 180-420 Tage, erster Wert ab first."""
    points: list[ChangePoint] = []
    s = first
    while s < n_steps:
        points.append((s, float(np.round(rng.uniform(low, high), 1))))
        s += int(rng.integers(180, 421))
    return tuple(points)


def default_synth_spec(seed: int = 42, n_steps: int = 2190, noise: float = 0.02) -> SynthSpec:
    """
    Schreibtisch-Feld: 6 Produzenten, 7 Injektoren (3 Wasser, 4 Gas),
    sechs Jahre Tagesdaten, gestaffelter Injektionsbeginn und mehrere
    Strategiewechsel. Parameter werden aus seed gezogen.
    """
    rng = np.random.default_rng(seed)
    n_p, n_w, n_g = 6, 3, 4
    arps = tuple(
        ArpsParams(
            q_i=float(np.round(rng.uniform(800.0, 1500.0), 1)),
            d_i=float(np.round(rng.uniform(3e-4, 8e-4), 6)),
            b=float(np.round(rng.uniform(0.0, 0.6), 2)),
        )
        for _ in range(n_p)
    )
    injectors = tuple(
        SynthInjector({"water_inj": _program(rng, n_steps, 30 * j, 800.0, 2500.0)}) for j in range(n_w)
    ) + tuple(
        SynthInjector({"gas_inj": _program(rng, n_steps, 30 * (n_w + j), 20_000.0, 80_000.0)}) for j in range(n_g)
    )
    n_i = n_w + n_g
    gains = np.empty((n_p, n_i))
    gains[:, :n_w] = rng.uniform(0.01, 0.06, size=(n_p, n_w))
    gains[:, n_w:] = rng.uniform(2e-4, 1e-3, size=(n_p, n_g))
    gas_gains = np.zeros((n_p, n_i))
    gas_gains[:, n_w:] = rng.uniform(0.05, 0.3, size=(n_p, n_g))
    lags = rng.integers(5, 61, size=(n_p, n_i))
    return SynthSpec(
        arps=arps,
        injectors=injectors,
        gains=gains,
        lags=lags,
        gas_gains=gas_gains,
        n_steps=n_steps,
        step_days=1,
        water_cut0=0.1,
        water_cut_growth=1e-3,
        gor=150.0,
        noise=noise,
        seed=seed,
    )
