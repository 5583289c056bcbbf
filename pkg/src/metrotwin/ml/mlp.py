"""Single-hidden-layer perceptron regressor (tanh units, linear output).

Trained with mini-batch gradient descent on z-scored inputs and targets.
The loss/gradient pair is exposed on a flat parameter vector so the test
suite can check the analytic gradient against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, TrainingDivergedError, ValidationError

__all__ = ["MlpModel", "fit_mlp", "mlp_loss_and_grad", "init_params", "n_params"]


def n_params(n_features: int, hidden_units: int) -> int:
    return hidden_units * n_features + hidden_units + hidden_units + 1


def init_params(n_features: int, hidden_units: int, rng: np.random.Generator,
                scale: float = 1.0) -> np.ndarray:
    """Gaussian init scaled by 1/sqrt(fan-in); scale=0 gives all zeros."""
    theta = rng.normal(size=n_params(n_features, hidden_units))
    fan = np.ones_like(theta)
    w1_end = hidden_units * n_features
    fan[:w1_end] = math.sqrt(n_features)
    fan[w1_end + hidden_units:w1_end + 2 * hidden_units] = math.sqrt(hidden_units)
    return scale * theta / fan


def _unpack(theta: np.ndarray, d: int, h: int):
    w1 = theta[:h * d].reshape(h, d)
    b1 = theta[h * d:h * d + h]
    w2 = theta[h * d + h:h * d + 2 * h]
    b2 = theta[-1]
    return w1, b1, w2, b2


def mlp_loss_and_grad(theta: np.ndarray, Z: np.ndarray, t: np.ndarray,
                      hidden_units: int) -> tuple[float, np.ndarray]:
    """Half mean-squared error and its gradient on the flat parameters."""
    n, d = Z.shape
    w1, b1, w2, b2 = _unpack(theta, d, hidden_units)
    a = np.tanh(Z @ w1.T + b1)  # n x h
    pred = a @ w2 + b2
    err = pred - t
    loss = 0.5 * float(np.mean(err ** 2))

    # Backprop; every gradient is averaged over the batch.
    g_pred = err / n
    g_w2 = a.T @ g_pred
    g_b2 = float(np.sum(g_pred))
    g_a = np.outer(g_pred, w2)
    g_pre = g_a * (1.0 - a ** 2)
    g_w1 = g_pre.T @ Z
    g_b1 = g_pre.sum(axis=0)
    grad = np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])
    return loss, grad


@dataclass
class MlpModel:
    theta: np.ndarray
    hidden_units: int
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    feature_names: tuple[str, ...] | None = None
    final_loss: float = float("nan")

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = (X - self.x_mean) / self.x_scale
        w1, b1, w2, b2 = _unpack(self.theta, Z.shape[1], self.hidden_units)
        a = np.tanh(Z @ w1.T + b1)
        return (a @ w2 + b2) * self.y_scale + self.y_mean

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "hidden_units": self.hidden_units,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "feature_names": list(self.feature_names) if self.feature_names else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        names = doc.get("feature_names")
        return cls(
            theta=np.asarray(doc["theta"], dtype=float),
            hidden_units=int(doc["hidden_units"]),
            x_mean=np.asarray(doc["x_mean"], dtype=float),
            x_scale=np.asarray(doc["x_scale"], dtype=float),
            y_mean=float(doc["y_mean"]),
            y_scale=float(doc["y_scale"]),
            feature_names=tuple(names) if names else None,
        )


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    hidden_units: int = 16,
    epochs: int = 500,
    step: float = 0.05,
    batch_size: int = 32,
    seed: int = 0,
    init_scale: float = 1.0,
    feature_names: tuple[str, ...] | None = None,
) -> MlpModel:
    """Mini-batch gradient descent on standardized inputs and targets.

    Raises TrainingDivergedError (with the offending epoch and loss in
    ``diagnostics``) if the loss goes non-finite.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if hidden_units < 1:
        raise ValidationError(f"hidden_units must be >= 1, got {hidden_units}")
    if X.shape[0] != y.size or y.size == 0:
        raise InsufficientDataError("empty training data")

    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0)
    x_scale[x_scale == 0] = 1.0
    y_mean = float(y.mean())
    y_scale = float(y.std())
    if y_scale == 0:
        y_scale = 1.0
    Z = (X - x_mean) / x_scale
    t = (y - y_mean) / y_scale

    rng = np.random.default_rng(seed)
    theta = init_params(Z.shape[1], hidden_units, rng, scale=init_scale)
    n = Z.shape[0]
    loss = float("nan")
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            # Overflow just means divergence, which the loss check reports.
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grad = mlp_loss_and_grad(theta, Z[batch], t[batch], hidden_units)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    "mlp training diverged",
                    diagnostics={"epoch": epoch, "loss": loss, "step": step},
                )
            theta = theta - step * grad
    return MlpModel(theta=theta, hidden_units=hidden_units, x_mean=x_mean,
                    x_scale=x_scale, y_mean=y_mean, y_scale=y_scale,
                    feature_names=feature_names, final_loss=loss)
