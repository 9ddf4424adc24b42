# tests/test_mlp.py
from __future__ import annotations

import numpy as np
import pytest

from wellcast.errors import DataError, DivergenceError
from wellcast.estimators.mlp import MlpTrainConfig, fit_mlp, init_mlp, mlp_loss, mlp_loss_and_grad


def _numeric_grad(model, X, Y, name, h=1e-5):
    params = {k: v.copy() for k, v in model.params().items()}
    grad = np.zeros_like(params[name])
    for idx in np.ndindex(grad.shape):
        orig = params[name][idx]
        params[name][idx] = orig + h
        plus = mlp_loss(model.with_params(params), X, Y)
        params[name][idx] = orig - h
        minus = mlp_loss(model.with_params(params), X, Y)
        params[name][idx] = orig
        grad[idx] = (plus - minus) / (2 * h)
    return grad


@pytest.mark.parametrize("activation", ["identity", "relu", "tanh"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backprop_matches_finite_differences(activation, seed):
    rng = np.random.default_rng(seed)
    model = init_mlp(3, 5, 2, activation, rng)
    model = model.with_params({k: v + 0.1 * rng.normal(size=v.shape) for k, v in model.params().items()})
    X = rng.normal(size=(7, 3))
    Y = rng.normal(size=(7, 2))
    _loss, grads = mlp_loss_and_grad(model, X, Y)
    for name, g in grads.items():
        num = _numeric_grad(model, X, Y, name)
        rel = np.linalg.norm(g - num) / max(np.linalg.norm(g) + np.linalg.norm(num), 1e-12)
        assert rel < 1e-4, (name, rel)


def test_identity_network_fits_linear_map():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 2))
    Y = (2.0 * X[:, 0] - X[:, 1] + 0.5).reshape(-1, 1)
    cfg = MlpTrainConfig(learning_rate=1e-2, max_epochs=3000, seed=11)
    model = fit_mlp(X, Y, None, None, 4, "identity", cfg)
    assert mlp_loss(model, X, Y) < 1e-3
    assert model.epochs_run == 3000


def test_training_is_deterministic_per_seed():
    rng = np.random.default_rng(6)
    X, Y = rng.normal(size=(30, 3)), rng.normal(size=(30, 1))
    cfg = MlpTrainConfig(max_epochs=20, batch_size=8, seed=3)
    a = fit_mlp(X, Y, None, None, 6, "tanh", cfg)
    b = fit_mlp(X, Y, None, None, 6, "tanh", cfg)
    c = fit_mlp(X, Y, None, None, 6, "tanh", MlpTrainConfig(max_epochs=20, batch_size=8, seed=4))
    for name in ("W_in", "b_hidden", "W_out", "b_out"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.W_in, c.W_in)


def test_early_stopping_restores_best_epoch():
    rng = np.random.default_rng(7)
    X, Y = rng.normal(size=(20, 2)), rng.normal(size=(20, 1))
    cfg = MlpTrainConfig(learning_rate=0.0, max_epochs=500, patience=5, seed=1)
    model = fit_mlp(X, Y, X[:5], Y[:5], 3, "relu", cfg)
    assert model.best_epoch == 1
    assert model.epochs_run == 6


def test_loss_goal_stops_training():
    X = np.linspace(-1, 1, 20).reshape(-1, 1)
    cfg = MlpTrainConfig(learning_rate=1e-2, max_epochs=5000, loss_goal=1e10, seed=0)
    model = fit_mlp(X, X, None, None, 2, "identity", cfg)
    assert model.epochs_run == 1


def test_divergence_is_a_numerical_error():
    X = np.full((4, 2), 1e200)
    with pytest.raises(DivergenceError) as exc:
        fit_mlp(X, np.ones((4, 1)), None, None, 3, "identity", MlpTrainConfig(max_epochs=5))
    assert exc.value.exit_code == 4


def test_invalid_configuration():
    with pytest.raises(DataError):
        MlpTrainConfig(beta1=1.0)
    with pytest.raises(DataError):
        init_mlp(2, 0, 1, "identity", np.random.default_rng(0))
