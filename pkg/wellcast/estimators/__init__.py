# wellcast/estimators/__init__.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Union

import numpy as np

from ..errors import DataError, SchemaError
from ..windowing import Normalizer, SeriesKey, SupervisedSet, WindowConfig, fit_normalizer, normalize
from .linear import LASSO_MAX_ITER, LASSO_TOL, LinearModel, fit_lasso, fit_ols, fit_ridge
from .mlp import Activation, MlpModel, MlpTrainConfig, fit_mlp, mlp_loss_and_grad

log = logging.getLogger(__name__)

EstimatorKind = Literal["ols", "ridge", "lasso", "mlp"]
ESTIMATOR_KINDS: tuple[str, ...] = ("ols", "ridge", "lasso", "mlp")

Estimator = Union[LinearModel, MlpModel]

__all__ = [
    "ESTIMATOR_KINDS",
    "Estimator",
    "EstimatorSpec",
    "LinearModel",
    "MlpModel",
    "MlpTrainConfig",
    "ModelBundle",
    "fit_estimator",
    "fit_lasso",
    "fit_mlp",
    "fit_ols",
    "fit_ridge",
    "mlp_loss_and_grad",
    "predict",
    "train_bundle",
]


@dataclass(frozen=True)
class EstimatorSpec:
    kind: EstimatorKind = "ols"
    alpha: float = 0.2
    hidden_size: int = 20
    activation: Activation = "identity"
    mlp: MlpTrainConfig = field(default_factory=MlpTrainConfig)
    lasso_tol: float = LASSO_TOL
    lasso_max_iter: int = LASSO_MAX_ITER

    def __post_init__(self) -> None:
        if self.kind not in ESTIMATOR_KINDS:
            raise DataError(f"unbekannter Schätzer {self.kind!r}")

    @property
    def descriptor(self) -> str:
        if self.kind == "ols":
            return "ols"
        if self.kind in ("ridge", "lasso"):
            return f"{self.kind}(alpha={self.alpha:g})"
        return f"mlp(hidden={self.hidden_size},activation={self.activation})"


def predict(model: Estimator, X: np.ndarray) -> np.ndarray:
    """Ŷ = X·W + b bzw. Vorwärtsrechnung des MLP."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.n_inputs:
        raise SchemaError(f"predict: {X.shape[1]} Eingangsspalten, Modell erwartet {model.n_inputs}")
    return model.predict(X)


def fit_estimator(
    spec: EstimatorSpec,
    X: np.ndarray,
    Y: np.ndarray,
    X_val: Optional[np.ndarray] = None,
    Y_val: Optional[np.ndarray] = None,
) -> Estimator:
    if spec.kind == "ols":
        return fit_ols(X, Y)
    if spec.kind == "ridge":
        return fit_ridge(X, Y, spec.alpha)
    if spec.kind == "lasso":
        return fit_lasso(X, Y, spec.alpha, spec.lasso_tol, spec.lasso_max_iter)
    return fit_mlp(X, Y, X_val, Y_val, spec.hidden_size, spec.activation, spec.mlp)


# -----------------------------------------------------------------------------
# Modell + Kontext für die Prognose
# -----------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Trainierter Schätzer plus Fenster- und Normalisierungskontext."""

    estimator: Estimator
    normalizer: Normalizer
    window: WindowConfig
    descriptor: str

    @property
    def x_keys(self):
        return self.normalizer.x_keys

    @property
    def y_keys(self):
        return self.normalizer.y_keys

    @property
    def series(self) -> tuple[SeriesKey, ...]:
        """Verfolgte Reihen in Spaltenreihenfolge der Eingänge."""
        return tuple(dict.fromkeys(k.series for k in self.x_keys))


def train_bundle(
    spec: EstimatorSpec,
    window: WindowConfig,
    train: SupervisedSet,
    val: Optional[SupervisedSet] = None,
) -> ModelBundle:
    """Normalizer nur aus train, dann Fit auf normalisierten Daten."""
    nz = fit_normalizer(train)
    tr = normalize(train, nz)
    X_val = Y_val = None
    if val is not None and val.n_rows > 0:
        va = normalize(val, nz)
        X_val, Y_val = va.X, va.Y
    est = fit_estimator(spec, tr.X, tr.Y, X_val, Y_val)
    log.debug("train_bundle: %s rows=%s val_rows=%s", spec.descriptor, train.n_rows, 0 if val is None else val.n_rows)
    return ModelBundle(est, nz, window, spec.descriptor)
