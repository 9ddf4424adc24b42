# wellcast/estimators/mlp.py
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np

from ..errors import DataError, DivergenceError

log = logging.getLogger(__name__)

Activation = Literal["identity", "relu", "tanh"]
ACTIVATIONS: tuple[str, ...] = ("identity", "relu", "tanh")

PARAM_NAMES: tuple[str, ...] = ("W_in", "b_hidden", "W_out", "b_out")


@dataclass(frozen=True)
class MlpTrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 2000
    batch_size: Optional[int] = None  # None = Full-Batch
    patience: int = 50
    loss_goal: float = 0.0  # Abbruch, sobald Trainingsfehler darunter liegt
    seed: int = 42

    def __post_init__(self) -> None:
        if self.learning_rate < 0:
            raise DataError("learning_rate muss >= 0 sein")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise DataError("beta1/beta2 müssen in [0, 1) liegen")
        if self.epsilon <= 0:
            raise DataError("epsilon muss > 0 sein")
        if self.max_epochs < 0:
            raise DataError("max_epochs muss >= 0 sein")
        if self.batch_size is not None and self.batch_size < 1:
            raise DataError("batch_size muss >= 1 sein")
        if self.patience < 1:
            raise DataError("patience muss >= 1 sein")


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Eine verdeckte Schicht: Ŷ = act(X·W_in + b_hidden)·W_out + b_out."""

    W_in: np.ndarray
    b_hidden: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray
    activation: Activation = "identity"
    epochs_run: int = 0
    best_epoch: int = 0

    @property
    def hidden_size(self) -> int:
        return int(self.W_in.shape[1])

    @property
    def n_inputs(self) -> int:
        return int(self.W_in.shape[0])

    @property
    def n_outputs(self) -> int:
        return int(self.W_out.shape[1])

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def with_params(self, params: dict[str, np.ndarray], **kw) -> "MlpModel":
        return replace(self, **{n: np.array(params[n], dtype=float) for n in PARAM_NAMES}, **kw)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _forward(self, np.asarray(X, dtype=float))[2]


# -----------------------------------------------------------------------------
# Aktivierungen
# -----------------------------------------------------------------------------
def _act(name: str, Z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(Z, 0.0)
    if name == "tanh":
        return np.tanh(Z)
    return Z


def _act_grad(name: str, Z: np.ndarray, H: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (Z > 0).astype(float)
    if name == "tanh":
        return 1.0 - H * H
    return np.ones_like(Z)


def _forward(model: MlpModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Z = X @ model.W_in + model.b_hidden
    H = _act(model.activation, Z)
    return Z, H, H @ model.W_out + model.b_out


# -----------------------------------------------------------------------------
# Initialisierung / Verlust
# -----------------------------------------------------------------------------
def init_mlp(n_inputs: int, hidden_size: int, n_outputs: int, activation: Activation, rng: np.random.Generator) -> MlpModel:
    """Symmetrisch gleichverteilt, skaliert mit fan_in + fan_out je Schicht; Biases 0."""
    if hidden_size < 1:
        raise DataError(f"hidden_size muss >= 1 sein (ist {hidden_size})")
    if activation not in ACTIVATIONS:
        raise DataError(f"unbekannte Aktivierung {activation!r}")
    lim_in = np.sqrt(6.0 / (n_inputs + hidden_size))
    lim_out = np.sqrt(6.0 / (hidden_size + n_outputs))
    return MlpModel(
        W_in=rng.uniform(-lim_in, lim_in, size=(n_inputs, hidden_size)),
        b_hidden=np.zeros(hidden_size),
        W_out=rng.uniform(-lim_out, lim_out, size=(hidden_size, n_outputs)),
        b_out=np.zeros(n_outputs),
        activation=activation,
    )


def mlp_loss(model: MlpModel, X: np.ndarray, Y: np.ndarray) -> float:
    diff = model.predict(X) - np.asarray(Y, dtype=float)
    return float(np.mean(diff * diff))


def mlp_loss_and_grad(model: MlpModel, X_batch: np.ndarray, Y_batch: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mittlerer quadratischer Fehler und Gradienten aller Parameter (Backpropagation)."""
    X = np.asarray(X_batch, dtype=float)
    Y = np.asarray(Y_batch, dtype=float)
    if X.shape[0] == 0:
        raise DataError("Leerer Batch")

    Z, H, Yhat = _forward(model, X)
    diff = Yhat - Y
    loss = float(np.mean(diff * diff))

    dY = 2.0 * diff / diff.size
    dH = dY @ model.W_out.T
    dZ = dH * _act_grad(model.activation, Z, H)
    grads = {
        "W_in": X.T @ dZ,
        "b_hidden": dZ.sum(axis=0),
        "W_out": H.T @ dY,
        "b_out": dY.sum(axis=0),
    }
    return loss, grads


# -----------------------------------------------------------------------------
# Adam
# -----------------------------------------------------------------------------
class Adam:
    def __init__(self, params: dict[str, np.ndarray], cfg: MlpTrainConfig) -> None:
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        for k, p in params.items():
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            m_hat = self.m[k] / (1.0 - c.beta1 ** self.t)
            v_hat = self.v[k] / (1.0 - c.beta2 ** self.t)
            p -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.epsilon)


# -----------------------------------------------------------------------------
# Training
# -----------------------------------------------------------------------------
def fit_mlp(
    X: np.ndarray,
    Y: np.ndarray,
    X_val: Optional[np.ndarray],
    Y_val: Optional[np.ndarray],
    hidden_size: int,
    activation: Activation,
    cfg: MlpTrainConfig,
) -> MlpModel:
    """
    Adam auf MSE. Abbruch nach max_epochs, bei Unterschreiten von loss_goal
    oder wenn der Validierungsfehler patience Epochen lang nicht besser wird
    (dann werden die besten Gewichte wiederhergestellt). Deterministisch je seed.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if X.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] == 0:
        raise DataError(f"fit_mlp: inkonsistente Formen X{X.shape} Y{Y.shape}")

    has_val = X_val is not None and Y_val is not None and len(X_val) > 0
    if has_val:
        X_val = np.asarray(X_val, dtype=float)
        Y_val = np.asarray(Y_val, dtype=float).reshape(len(X_val), -1)

    rng = np.random.default_rng(cfg.seed)
    model = init_mlp(X.shape[1], int(hidden_size), Y.shape[1], activation, rng)
    params = {k: v.copy() for k, v in model.params().items()}
    opt = Adam(params, cfg)

    n = X.shape[0]
    batch = n if cfg.batch_size is None else min(int(cfg.batch_size), n)

    best_params = {k: v.copy() for k, v in params.items()}
    best_loss = np.inf
    best_epoch = 0
    stale = 0
    epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = np.arange(n) if batch == n else rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            loss, grads = mlp_loss_and_grad(model.with_params(params), X[idx], Y[idx])
            if not np.isfinite(loss):
                raise DivergenceError(epoch, loss)
            opt.step(params, grads)

        current = model.with_params(params)
        train_loss = mlp_loss(current, X, Y)
        if not np.isfinite(train_loss):
            raise DivergenceError(epoch, train_loss)

        monitor = mlp_loss(current, X_val, Y_val) if has_val else train_loss
        if monitor < best_loss:
            best_loss = monitor
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1

        if has_val and stale >= cfg.patience:
            log.debug("fit_mlp: early stop epoch=%s best_epoch=%s val_loss=%.6g", epoch, best_epoch, best_loss)
            break
        if train_loss < cfg.loss_goal:
            log.debug("fit_mlp: loss goal reached epoch=%s loss=%.6g", epoch, train_loss)
            break

    final = best_params if has_val else params
    log.debug("fit_mlp: hidden=%s activation=%s epochs=%s best_epoch=%s", hidden_size, activation, epoch, best_epoch)
    return model.with_params(final, epochs_run=epoch, best_epoch=best_epoch if has_val else epoch)
