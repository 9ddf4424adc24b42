# wellcast/services/model_io.py
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import SchemaError
from ..estimators import LinearModel, MlpModel, ModelBundle
from ..windowing import ColumnKey, Normalizer, WindowConfig

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _keys_out(keys: tuple[ColumnKey, ...]) -> list[list[Any]]:
    return [[k.well_id, k.phase, k.lag] for k in keys]


def _keys_in(rows: list[list[Any]]) -> tuple[ColumnKey, ...]:
    return tuple(ColumnKey(str(w), str(p), int(lag)) for w, p, lag in rows)


def _arr(v: Any) -> np.ndarray:
    return np.asarray(v, dtype=float)


def bundle_to_dict(bundle: ModelBundle) -> dict[str, Any]:
    est = bundle.estimator
    if isinstance(est, LinearModel):
        est_d: dict[str, Any] = {
            "type": "linear",
            "kind": est.kind,
            "alpha": est.alpha,
            "W": est.W.tolist(),
            "b": est.b.tolist(),
            "rank_deficient": est.rank_deficient,
            "converged": est.converged,
            "n_iter": est.n_iter,
        }
    else:
        est_d = {
            "type": "mlp",
            "activation": est.activation,
            "epochs_run": est.epochs_run,
            "best_epoch": est.best_epoch,
            **{name: arr.tolist() for name, arr in est.params().items()},
        }
    nz = bundle.normalizer
    return {
        "format_version": FORMAT_VERSION,
        "descriptor": bundle.descriptor,
        "window": {
            "look_back": bundle.window.look_back,
            "look_forward": bundle.window.look_forward,
            "scope": bundle.window.scope,
        },
        "normalizer": {
            "x_keys": _keys_out(nz.x_keys),
            "y_keys": _keys_out(nz.y_keys),
            "x_mean": nz.x_mean.tolist(),
            "x_std": nz.x_std.tolist(),
            "y_mean": nz.y_mean.tolist(),
            "y_std": nz.y_std.tolist(),
        },
        "estimator": est_d,
    }


def bundle_from_dict(d: dict[str, Any]) -> ModelBundle:
    if d.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"Modelldatei: format_version {d.get('format_version')!r} nicht unterstützt")
    try:
        w = d["window"]
        window = WindowConfig(int(w["look_back"]), int(w["look_forward"]), w["scope"])
        n = d["normalizer"]
        normalizer = Normalizer(
            _keys_in(n["x_keys"]),
            _keys_in(n["y_keys"]),
            _arr(n["x_mean"]),
            _arr(n["x_std"]),
            _arr(n["y_mean"]),
            _arr(n["y_std"]),
        )
        e = d["estimator"]
        if e["type"] == "linear":
            est: LinearModel | MlpModel = LinearModel(
                W=_arr(e["W"]).reshape(len(normalizer.x_keys), len(normalizer.y_keys)),
                b=_arr(e["b"]),
                kind=e["kind"],
                alpha=float(e["alpha"]),
                rank_deficient=bool(e["rank_deficient"]),
                converged=bool(e["converged"]),
                n_iter=int(e["n_iter"]),
            )
        elif e["type"] == "mlp":
            est = MlpModel(
                W_in=_arr(e["W_in"]).reshape(len(normalizer.x_keys), -1),
                b_hidden=_arr(e["b_hidden"]),
                W_out=_arr(e["W_out"]).reshape(-1, len(normalizer.y_keys)),
                b_out=_arr(e["b_out"]),
                activation=e["activation"],
                epochs_run=int(e["epochs_run"]),
                best_epoch=int(e["best_epoch"]),
            )
        else:
            raise SchemaError(f"Modelldatei: unbekannter Schätzertyp {e['type']!r}")
    except KeyError as exc:
        raise SchemaError(f"Modelldatei: Feld {exc.args[0]!r} fehlt") from None
    return ModelBundle(est, normalizer, window, str(d["descriptor"]))


def save_model(bundle: ModelBundle, path: Path | str) -> Path:
    """JSON; Python-Floats werden verlustfrei (repr) geschrieben."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bundle_to_dict(bundle), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("save_model: path=%s descriptor=%s", path, bundle.descriptor)
    return path


def load_model(path: Path | str) -> ModelBundle:
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"Modelldatei {path}: kein gültiges JSON ({exc.msg}, Zeile {exc.lineno})") from None
    return bundle_from_dict(d)
