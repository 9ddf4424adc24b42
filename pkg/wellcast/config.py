# wellcast/config.py
from __future__ import annotations

import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import ConfigError, DataError
from .estimators import ESTIMATOR_KINDS, EstimatorSpec
from .estimators.mlp import ACTIVATIONS, MlpTrainConfig
from .forecaster import days_to_steps
from .gridsearch import GridSpec
from .windowing import SCOPES, SplitSpec, WindowConfig

log = logging.getLogger(__name__)

ENV_OUT_DIR = "WELLCAST_OUT_DIR"
DEFAULT_OUT_DIR = "out"

# wählbare Stufen in Workflow-Reihenfolge ("synth" läuft automatisch bei synthetischer Quelle)
STAGES: tuple[str, ...] = (
    "condition",
    "reshape",
    "train",
    "forecast",
    "evaluate",
    "gridsearch",
    "decline",
    "plot",
    "report",
)
DEFAULT_STAGES: tuple[str, ...] = ("condition", "reshape", "train", "forecast", "evaluate", "decline", "plot")

_MISSING = object()


# -----------------------------------------------------------------------------
# Konfigurationsbaum
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class InputConfig:
    dataset: Optional[Path] = None
    synth: bool = False
    tests: Optional[Path] = None
    schedule: Optional[Path] = None
    model: Optional[Path] = None


@dataclass(frozen=True)
class DatasetConfig:
    sampling_days: int = 10
    trim: bool = True
    start_date: Optional[date] = None
    wells: Optional[tuple[str, ...]] = None
    smoothing: bool = False
    smoothing_days: int = 30
    potential: bool = False


@dataclass(frozen=True)
class RollingSection:
    min_train_days: int = 1095
    retrain_days: int = 365
    horizon_days: int = 180
    policy: str = "incremental"
    fixed_length_days: Optional[int] = None
    validation_fraction: float = 0.15
    score_space: str = "raw"


@dataclass(frozen=True)
class ForecastSection:
    horizon_days: int = 180
    hold_last: bool = False


@dataclass(frozen=True)
class SynthSection:
    n_steps: int = 2190
    noise: float = 0.02
    nonlinearity: float = 0.0
    water_cut_growth: float = 1e-3


@dataclass(frozen=True)
class DeclineSection:
    phase: str = "oil"


@dataclass(frozen=True)
class RunConfig:
    input: InputConfig
    out_dir: Path
    stages: tuple[str, ...]
    seed: int
    dataset: DatasetConfig
    window: WindowConfig
    split: SplitSpec
    estimator: EstimatorSpec
    rolling: RollingSection
    forecast: ForecastSection
    grid: GridSpec
    synth: SynthSection
    decline: DeclineSection
    source_path: Optional[Path] = None
    applied_defaults: tuple[str, ...] = field(default=(), compare=False)


# -----------------------------------------------------------------------------
# Leser mit Pfadangabe
# -----------------------------------------------------------------------------
class _Section:
    """Ein TOML-Abschnitt; merkt sich gelesene Schlüssel und angewandte Defaults."""

    def __init__(self, name: str, data: Any, defaults: list[str]) -> None:
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(name, "muss ein Abschnitt (Tabelle) sein")
        self.name = name
        self.data = data
        self.used: set[str] = set()
        self.defaults = defaults

    def key(self, k: str) -> str:
        return f"{self.name}.{k}"

    def get(
        self,
        k: str,
        kind: type | tuple[type, ...],
        default: Any = _MISSING,
        check: Optional[Callable[[Any], bool]] = None,
        rule: str = "",
    ) -> Any:
        self.used.add(k)
        if k not in self.data:
            if default is _MISSING:
                raise ConfigError(self.key(k), "Pflichtangabe fehlt")
            if default is not None:
                self.defaults.append(self.key(k))
                log.info("config default: %s=%s", self.key(k), default)
            return default
        v = _coerce(self.key(k), self.data[k], kind)
        if check is not None and not check(v):
            raise ConfigError(self.key(k), f"Wert {v!r} außerhalb des zulässigen Bereichs ({rule})")
        return v

    def get_list(self, k: str, kind: type, default: tuple[Any, ...], check: Optional[Callable[[Any], bool]] = None, rule: str = "") -> tuple[Any, ...]:
        self.used.add(k)
        if k not in self.data:
            self.defaults.append(self.key(k))
            log.info("config default: %s=%s", self.key(k), list(default))
            return default
        raw = self.data[k]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(self.key(k), "muss eine nicht leere Liste sein")
        out = tuple(_coerce(f"{self.key(k)}[{i}]", v, kind) for i, v in enumerate(raw))
        if check is not None:
            for v in out:
                if not check(v):
                    raise ConfigError(self.key(k), f"Wert {v!r} außerhalb des zulässigen Bereichs ({rule})")
        return out

    def warn_unknown(self) -> None:
        for k in sorted(set(self.data) - self.used):
            log.warning("config: unknown key %s ignored", self.key(k))


def _coerce(key: str, v: Any, kind: type | tuple[type, ...]) -> Any:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if bool in kinds:
        if isinstance(v, bool):
            return v
    elif isinstance(v, bool):
        raise ConfigError(key, f"erwartet {_type_name(kinds)}, gefunden bool")
    if float in kinds and isinstance(v, (int, float)):
        return float(v)
    if int in kinds and isinstance(v, int):
        return int(v)
    if str in kinds and isinstance(v, str):
        return v
    if date in kinds:
        if isinstance(v, date):
            return v
        if isinstance(v, str):
            try:
                return date.fromisoformat(v)
            except ValueError:
                pass
    raise ConfigError(key, f"erwartet {_type_name(kinds)}, gefunden {type(v).__name__}")


def _type_name(kinds: tuple[type, ...]) -> str:
    return " oder ".join(k.__name__ for k in kinds)


def _positive(v: Any) -> bool:
    return v >= 1


def _non_negative(v: Any) -> bool:
    return v >= 0


# -----------------------------------------------------------------------------
# parse_config
# -----------------------------------------------------------------------------
def parse_config(
    path: Path | str,
    *,
    out_dir: Optional[Path | str] = None,
    seed: Optional[int] = None,
) -> RunConfig:
    """
    Liest eine TOML-Konfiguration, ergänzt Defaults (jeweils geloggt) und prüft
    Typen und Bereiche. Fehler -> ConfigError mit vollständigem Schlüsselpfad.
    Ausgabeverzeichnis: --out, sonst output.dir, sonst WELLCAST_OUT_DIR, sonst "out".
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"Datei nicht gefunden: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: kein gültiges TOML ({exc})") from None
    try:
        return config_from_dict(raw, base_dir=path.parent, out_dir=out_dir, seed=seed, source_path=path)
    except DataError as exc:
        # Bereichsprüfungen der Fachobjekte (SplitSpec, GridSpec, ...) gelten hier als Konfigurationsfehler
        raise ConfigError("config", str(exc)) from exc


def config_from_dict(
    raw: dict[str, Any],
    *,
    base_dir: Path = Path("."),
    out_dir: Optional[Path | str] = None,
    seed: Optional[int] = None,
    source_path: Optional[Path] = None,
) -> RunConfig:
    defaults: list[str] = []
    names = ("input", "output", "run", "dataset", "window", "split", "estimator", "mlp", "rolling", "forecast", "grid", "synth", "decline")
    for k in sorted(set(raw) - set(names)):
        log.warning("config: unknown section %s ignored", k)
    sec = {n: _Section(n, raw.get(n), defaults) for n in names}

    def _path(s: _Section, k: str) -> Optional[Path]:
        v = s.get(k, str, None)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else base_dir / p

    # input -------------------------------------------------------------------
    s = sec["input"]
    synth_src = s.get("synth", bool, False)
    dataset = _path(s, "dataset")
    if dataset is None and not synth_src:
        raise ConfigError("input.dataset", "Pflichtangabe fehlt (Datensatzpfad oder input.synth = true)")
    if dataset is not None and synth_src:
        raise ConfigError("input.dataset", "genau eine Datenquelle angeben (Datei oder input.synth)")
    inp = InputConfig(dataset, synth_src, _path(s, "tests"), _path(s, "schedule"), _path(s, "model"))
    for p in (inp.dataset, inp.tests, inp.schedule, inp.model):
        if p is not None and not p.exists():
            raise ConfigError("input", f"Datei nicht gefunden: {p}")

    # output / run ------------------------------------------------------------
    out_cfg = sec["output"].get("dir", str, None)
    if out_dir is not None:
        out = Path(out_dir)
    elif out_cfg is not None:
        out = Path(out_cfg) if Path(out_cfg).is_absolute() else base_dir / out_cfg
    else:
        out = Path(os.environ.get(ENV_OUT_DIR, "").strip() or DEFAULT_OUT_DIR)
        log.info("config default: output.dir=%s", out)

    s = sec["run"]
    stages = s.get_list("stages", str, DEFAULT_STAGES, lambda v: v in STAGES, "/".join(STAGES))
    stages = tuple(st for st in STAGES if st in stages)
    run_seed = s.get("seed", int, 42, _non_negative, ">= 0")
    if seed is not None:
        run_seed = int(seed)

    # dataset -----------------------------------------------------------------
    s = sec["dataset"]
    wells = s.get_list("wells", str, ()) if "wells" in s.data else None
    ds_cfg = DatasetConfig(
        sampling_days=s.get("sampling_days", int, 10, _positive, ">= 1"),
        trim=s.get("trim", bool, True),
        start_date=s.get("start_date", date, None),
        wells=wells,
        smoothing=s.get("smoothing", bool, False),
        smoothing_days=s.get("smoothing_days", int, 30, _positive, ">= 1"),
        potential=s.get("potential", bool, False),
    )
    if ds_cfg.potential and inp.tests is None:
        raise ConfigError("input.tests", "Pflichtangabe fehlt (dataset.potential = true)")

    # window / split ----------------------------------------------------------
    s = sec["window"]
    window = WindowConfig(
        look_back=s.get("look_back", int, 15, _positive, ">= 1"),
        look_forward=s.get("look_forward", int, 1, _positive, ">= 1"),
        scope=s.get("scope", str, "full_field", lambda v: v in SCOPES, "/".join(SCOPES)),
    )
    if window.look_forward != 1 and set(stages) & {"forecast", "evaluate", "gridsearch"}:
        raise ConfigError("window.look_forward", "rekursive Prognose und Auswertung nur mit look_forward = 1")
    s = sec["split"]
    frac = lambda v: 0.0 <= v <= 1.0  # noqa: E731
    train = s.get("train", float, 0.7, frac, "[0, 1]")
    val = s.get("val", float, 0.15, frac, "[0, 1]")
    test = s.get("test", float, 0.15, frac, "[0, 1]")
    val_start = s.get("val_start", date, None)
    test_start = s.get("test_start", date, None)
    if (val_start is None) != (test_start is None):
        raise ConfigError("split.test_start" if test_start is None else "split.val_start", "val_start und test_start nur gemeinsam")
    if val_start is not None and test_start < val_start:
        raise ConfigError("split.test_start", f"liegt vor split.val_start ({test_start} < {val_start})")
    if val_start is None and abs(train + val + test - 1.0) > 1e-9:
        raise ConfigError("split", "train + val + test muss 1 ergeben")
    try:
        split = SplitSpec(train, val, test, val_start, test_start)
    except DataError as exc:
        raise ConfigError("split", str(exc)) from exc

    # estimator / mlp ---------------------------------------------------------
    s = sec["mlp"]
    mlp = MlpTrainConfig(
        learning_rate=s.get("learning_rate", float, 1e-3, _non_negative, ">= 0"),
        beta1=s.get("beta1", float, 0.9, lambda v: 0 <= v < 1, "[0, 1)"),
        beta2=s.get("beta2", float, 0.999, lambda v: 0 <= v < 1, "[0, 1)"),
        epsilon=s.get("epsilon", float, 1e-8, lambda v: v > 0, "> 0"),
        max_epochs=s.get("max_epochs", int, 2000, _non_negative, ">= 0"),
        batch_size=s.get("batch_size", int, None, _positive, ">= 1"),
        patience=s.get("patience", int, 50, _positive, ">= 1"),
        loss_goal=s.get("loss_goal", float, 0.0, _non_negative, ">= 0"),
        seed=run_seed,
    )
    s = sec["estimator"]
    estimator = EstimatorSpec(
        kind=s.get("kind", str, "ols", lambda v: v in ESTIMATOR_KINDS, "/".join(ESTIMATOR_KINDS)),
        alpha=s.get("alpha", float, 0.2, _non_negative, ">= 0"),
        hidden_size=s.get("hidden_size", int, 20, _positive, ">= 1"),
        activation=s.get("activation", str, "identity", lambda v: v in ACTIVATIONS, "/".join(ACTIVATIONS)),
        mlp=mlp,
    )

    # rolling / forecast ------------------------------------------------------
    s = sec["rolling"]
    rolling = RollingSection(
        min_train_days=s.get("min_train_days", int, 1095, _positive, ">= 1"),
        retrain_days=s.get("retrain_days", int, 365, _positive, ">= 1"),
        horizon_days=s.get("horizon_days", int, 180, _positive, ">= 1"),
        policy=s.get("policy", str, "incremental", lambda v: v in ("incremental", "fixed"), "incremental/fixed"),
        fixed_length_days=s.get("fixed_length_days", int, None, _positive, ">= 1"),
        validation_fraction=s.get("validation_fraction", float, 0.15, lambda v: 0 <= v < 1, "[0, 1)"),
        score_space=s.get("score_space", str, "raw", lambda v: v in ("raw", "normalized"), "raw/normalized"),
    )
    # Längen in Schritten der Zielabtastung
    min_rows = window.look_back + 1
    if days_to_steps(rolling.min_train_days, ds_cfg.sampling_days) < min_rows:
        raise ConfigError(
            "rolling.min_train_days",
            f"ergibt weniger als look_back + 1 = {min_rows} Schritte à {ds_cfg.sampling_days} d",
        )
    if rolling.fixed_length_days is not None:
        if rolling.fixed_length_days > rolling.min_train_days:
            raise ConfigError("rolling.fixed_length_days", f"muss <= rolling.min_train_days ({rolling.min_train_days}) sein")
        if days_to_steps(rolling.fixed_length_days, ds_cfg.sampling_days) < min_rows:
            raise ConfigError(
                "rolling.fixed_length_days",
                f"ergibt weniger als look_back + 1 = {min_rows} Schritte à {ds_cfg.sampling_days} d",
            )
    s = sec["forecast"]
    forecast = ForecastSection(
        horizon_days=s.get("horizon_days", int, 180, _positive, ">= 1"),
        hold_last=s.get("hold_last", bool, False),
    )

    # grid --------------------------------------------------------------------
    s = sec["grid"]
    grid = GridSpec(
        sampling_days=s.get_list("sampling_days", int, (5, 10, 20), _positive, ">= 1"),
        look_back=s.get_list("look_back", int, (10, 15, 25), _positive, ">= 1"),
        estimator=s.get_list("estimator", str, (estimator.kind,), lambda v: v in ESTIMATOR_KINDS, "/".join(ESTIMATOR_KINDS)),
        alpha=s.get_list("alpha", float, (0.0, 0.05, 0.2, 0.4, 0.6), _non_negative, ">= 0"),
        hidden_size=s.get_list("hidden_size", int, (10, 20, 40, 70), _positive, ">= 1"),
        activation=s.get_list("activation", str, (estimator.activation,), lambda v: v in ACTIVATIONS, "/".join(ACTIVATIONS)),
        min_train_days=s.get_list("min_train_days", int, (rolling.min_train_days,), _positive, ">= 1"),
        policy=s.get_list("policy", str, (rolling.policy,), lambda v: v in ("incremental", "fixed"), "incremental/fixed"),
        retrain_days=s.get_list("retrain_days", int, (rolling.retrain_days,), _positive, ">= 1"),
        horizon_days=rolling.horizon_days,
        scope=window.scope,
        trim=ds_cfg.trim,
        validation_fraction=rolling.validation_fraction,
        mlp=mlp,
        seed=run_seed,
        workers=s.get("workers", int, 1, _positive, ">= 1"),
    )

    # synth / decline ---------------------------------------------------------
    s = sec["synth"]
    synth = SynthSection(
        n_steps=s.get("n_steps", int, 2190, _positive, ">= 1"),
        noise=s.get("noise", float, 0.02, _non_negative, ">= 0"),
        nonlinearity=s.get("nonlinearity", float, 0.0, _non_negative, ">= 0"),
        water_cut_growth=s.get("water_cut_growth", float, 1e-3, _non_negative, ">= 0"),
    )
    s = sec["decline"]
    decline = DeclineSection(phase=s.get("phase", str, "oil", lambda v: v in ("oil", "gas", "water"), "oil/gas/water"))

    for section in sec.values():
        section.warn_unknown()

    return RunConfig(
        input=inp,
        out_dir=out,
        stages=stages,
        seed=run_seed,
        dataset=ds_cfg,
        window=window,
        split=split,
        estimator=estimator,
        rolling=rolling,
        forecast=forecast,
        grid=grid,
        synth=synth,
        decline=decline,
        source_path=source_path,
        applied_defaults=tuple(defaults),
    )
