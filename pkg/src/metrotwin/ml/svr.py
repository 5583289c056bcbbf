"""Linear epsilon-insensitive support vector regression.

Trained by stochastic subgradient descent. Features are z-scored from
the training data; internally the target is z-scored too (with epsilon
rescaled by the target sigma), which leaves the loss equivalent while
keeping step sizes well conditioned. The ridge penalty applies to the
weights in standardized feature space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError, ValidationError

__all__ = ["SvrModel", "fit_svr_linear"]


@dataclass
class SvrModel:
    weights: np.ndarray  # standardized-space weights
    bias: float
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    feature_names: tuple[str, ...] | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = (X - self.x_mean) / self.x_scale
        return (z @ self.weights + self.bias) * self.y_scale + self.y_mean

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "feature_names": list(self.feature_names) if self.feature_names else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SvrModel":
        names = doc.get("feature_names")
        return cls(
            weights=np.asarray(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            x_mean=np.asarray(doc["x_mean"], dtype=float),
            x_scale=np.asarray(doc["x_scale"], dtype=float),
            y_mean=float(doc["y_mean"]),
            y_scale=float(doc["y_scale"]),
            feature_names=tuple(names) if names else None,
        )


def fit_svr_linear(
    X: np.ndarray,
    y: np.ndarray,
    epsilon: float = 0.5,
    lam: float = 1e-3,
    epochs: int = 150,
    step: float = 0.1,
    seed: int = 0,
    feature_names: tuple[str, ...] | None = None,
) -> SvrModel:
    """Minimize lam*||w||^2 + mean eps-insensitive loss by SGD.

    ``epsilon`` is in target units (micrometres for deviation models);
    epsilon=0 reduces to L1-loss regression. The step decays as
    1/sqrt(epoch) with samples visited in seeded shuffled order.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    if lam <= 0:
        raise ValidationError(f"lambda must be > 0, got {lam}")
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
    eps_scaled = epsilon / y_scale

    rng = np.random.default_rng(seed)
    n, p = Z.shape
    w = np.zeros(p)
    b = 0.0
    for epoch in range(epochs):
        eta = step / np.sqrt(epoch + 1.0)
        for i in rng.permutation(n):
            err = float(Z[i] @ w + b - t[i])
            if abs(err) > eps_scaled:
                g = 1.0 if err > 0 else -1.0
                w -= eta * (g * Z[i] + 2.0 * lam * w)
                b -= eta * g
            else:
                w -= eta * 2.0 * lam * w
    return SvrModel(weights=w, bias=b, x_mean=x_mean, x_scale=x_scale,
                    y_mean=y_mean, y_scale=y_scale, feature_names=feature_names)
