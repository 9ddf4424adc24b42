# wellcast/estimators/linear.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..errors import DataError

log = logging.getLogger(__name__)

LinearKind = Literal["ols", "ridge", "lasso"]

# relative Singulärwertschwelle für die Minimum-Norm-Lösung
RCOND = 1e-10

LASSO_TOL = 1e-6
LASSO_MAX_ITER = 10_000


@dataclass(frozen=True, eq=False)
class LinearModel:
    """
    Ŷ = X·W + b. W hat die Form (n_inputs, n_outputs).
    rank_deficient / converged / n_iter sind Solver-Hinweise, keine Fehler.
    """

    W: np.ndarray
    b: np.ndarray
    kind: LinearKind
    alpha: float = 0.0
    rank_deficient: bool = False
    converged: bool = True
    n_iter: int = 0

    @property
    def n_inputs(self) -> int:
        return int(self.W.shape[0])

    @property
    def n_outputs(self) -> int:
        return int(self.W.shape[1])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.W + self.b


def _as_2d(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if X.shape[0] == 0:
        raise DataError("Regression ohne Trainingszeilen")
    if X.shape[0] != Y.shape[0]:
        raise DataError(f"X hat {X.shape[0]} Zeilen, Y hat {Y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("Regression mit nicht-endlichen Werten")
    return X, Y


def _center(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    return X - x_mean, Y - y_mean, x_mean, y_mean


def _min_norm(Xc: np.ndarray, Yc: np.ndarray) -> tuple[np.ndarray, bool]:
    W, _res, rank, _sv = np.linalg.lstsq(Xc, Yc, rcond=RCOND)
    return W, int(rank) < Xc.shape[1]


# -----------------------------------------------------------------------------
# OLS / Ridge
# -----------------------------------------------------------------------------
def fit_ols(X: np.ndarray, Y: np.ndarray) -> LinearModel:
    """Kleinste Quadrate je Ausgangsspalte; Achsenabschnitt über zentrierte Daten."""
    X, Y = _as_2d(X, Y)
    Xc, Yc, x_mean, y_mean = _center(X, Y)
    W, deficient = _min_norm(Xc, Yc)
    if deficient:
        log.warning("fit_ols: rank-deficient design (n=%s, p=%s), minimum-norm solution", *X.shape)
    return LinearModel(W, y_mean - x_mean @ W, "ols", 0.0, rank_deficient=deficient)


def fit_ridge(X: np.ndarray, Y: np.ndarray, alpha: float) -> LinearModel:
    """
    Minimiert  Σ (y - (w·x + b))² + α·Σ w²  (ohne 1/n-Skalierung),
    geschlossen auf zentrierten Daten, b wird nicht bestraft.
    """
    if alpha < 0:
        raise DataError(f"alpha muss >= 0 sein (ist {alpha})")
    X, Y = _as_2d(X, Y)
    Xc, Yc, x_mean, y_mean = _center(X, Y)

    if alpha == 0:
        W, deficient = _min_norm(Xc, Yc)
    else:
        A = Xc.T @ Xc + float(alpha) * np.eye(Xc.shape[1])
        W = np.linalg.solve(A, Xc.T @ Yc)
        deficient = False
    log.debug("fit_ridge: alpha=%s n=%s p=%s norm=%.6g", alpha, X.shape[0], X.shape[1], float(np.linalg.norm(W)))
    return LinearModel(W, y_mean - x_mean @ W, "ridge", float(alpha), rank_deficient=deficient)


# -----------------------------------------------------------------------------
# Lasso (zyklischer Koordinatenabstieg)
# -----------------------------------------------------------------------------
def soft_threshold(x: float, t: float) -> float:
    return float(np.sign(x) * max(abs(x) - t, 0.0))


def _lasso_column(Xc: np.ndarray, yc: np.ndarray, alpha: float, tol: float, max_iter: int) -> tuple[np.ndarray, int, bool]:
    p = Xc.shape[1]
    w = np.zeros(p)
    r = yc.copy()
    z = np.einsum("ij,ij->j", Xc, Xc)
    half = 0.5 * alpha

    for sweep in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            if z[j] == 0.0:
                continue
            xj = Xc[:, j]
            rho = float(xj @ r) + z[j] * w[j]
            new = soft_threshold(rho, half) / z[j]
            delta = new - w[j]
            if delta != 0.0:
                r -= delta * xj
                w[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            return w, sweep, True
    return w, max_iter, False


def fit_lasso(
    X: np.ndarray,
    Y: np.ndarray,
    alpha: float,
    tol: float = LASSO_TOL,
    max_iter: int = LASSO_MAX_ITER,
) -> LinearModel:
    """
    Minimiert  Σ (y - (w·x + b))² + α·Σ |w|  per Koordinatenabstieg mit
    Soft-Thresholding. Konvergiert, wenn die größte Koeffizientenänderung
    eines Durchlaufs < tol ist; sonst Ergebnis mit converged=False.
    """
    if alpha < 0:
        raise DataError(f"alpha muss >= 0 sein (ist {alpha})")
    if tol <= 0:
        raise DataError(f"tol muss > 0 sein (ist {tol})")
    X, Y = _as_2d(X, Y)
    Xc, Yc, x_mean, y_mean = _center(X, Y)

    cols: list[np.ndarray] = []
    n_iter = 0
    converged = True
    for m in range(Y.shape[1]):
        w, it, ok = _lasso_column(Xc, Yc[:, m], float(alpha), float(tol), int(max_iter))
        cols.append(w)
        n_iter = max(n_iter, it)
        converged = converged and ok

    W = np.column_stack(cols)
    if not converged:
        log.warning("fit_lasso: not converged after %s sweeps (alpha=%s, tol=%s)", max_iter, alpha, tol)
    log.debug("fit_lasso: alpha=%s sweeps=%s zeros=%s/%s", alpha, n_iter, int(np.sum(W == 0.0)), W.size)
    return LinearModel(W, y_mean - x_mean @ W, "lasso", float(alpha), converged=converged, n_iter=n_iter)
