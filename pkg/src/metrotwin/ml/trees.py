"""CART regression trees plus the two tree ensembles built on them.

Trees are stored as flat parallel arrays (feature, threshold, children,
value) so prediction can route whole batches level by level instead of
walking Python objects per sample.

Determinism contract: a fit is a pure function of (data multiset, seed).
Split search breaks ties toward the lowest feature index and lowest
threshold, and the ensembles canonicalize row order before drawing
bootstrap samples, so shuffling training rows does not change the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientDataError, ValidationError

__all__ = ["TreeModel", "ForestModel", "GbModel",
           "fit_cart", "fit_random_forest", "fit_gradient_boosting"]

_LEAF = -1


@dataclass
class TreeModel:
    """A fitted binary regression tree over a fixed feature schema."""

    feature: np.ndarray  # int, _LEAF marks a leaf
    threshold: np.ndarray  # float, split is x[f] <= t
    left: np.ndarray  # int child indices
    right: np.ndarray
    value: np.ndarray  # float leaf predictions (defined on all nodes)
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat != _LEAF
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.value[node]

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeModel":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int64),
            threshold=np.asarray(doc["threshold"], dtype=float),
            left=np.asarray(doc["left"], dtype=np.int64),
            right=np.asarray(doc["right"], dtype=np.int64),
            value=np.asarray(doc["value"], dtype=float),
            n_features=int(doc["n_features"]),
        )


class _TreeBuilder:
    def __init__(self, X, y, max_depth, min_leaf, feature_subset, rng):
        self.X = X
        self.y = y
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_subset = feature_subset
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def build(self, rows: np.ndarray, depth: int) -> int:
        node = len(self.feature)
        ysub = self.y[rows]
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(float(ysub.mean()))

        if depth >= self.max_depth or rows.size < 2 * self.min_leaf:
            return node
        if np.all(ysub == ysub[0]):  # pure target
            return node

        split = self._best_split(rows)
        if split is None:
            return node
        f, t = split
        go_left = self.X[rows, f] <= t
        self.feature[node] = f
        self.threshold[node] = t
        self.left[node] = self.build(rows[go_left], depth + 1)
        self.right[node] = self.build(rows[~go_left], depth + 1)
        return node

    def _candidate_features(self) -> np.ndarray:
        p = self.X.shape[1]
        m = self.feature_subset
        if m is None or m >= p:
            return np.arange(p)
        # Sorted so tie-breaking stays order-independent.
        return np.sort(self.rng.choice(p, size=m, replace=False))

    def _best_split(self, rows: np.ndarray):
        y = self.y[rows]
        n = rows.size
        best_sse = math.inf
        best = None
        lo = self.min_leaf - 1
        hi = n - self.min_leaf
        for f in self._candidate_features():
            x = self.X[rows, f]
            order = np.argsort(x, kind="stable")
            xv = x[order]
            yv = y[order]
            idx = np.arange(lo, hi)
            if idx.size == 0:
                continue
            idx = idx[xv[idx] < xv[idx + 1]]  # only between distinct values
            if idx.size == 0:
                continue
            csum = np.cumsum(yv)
            csq = np.cumsum(yv * yv)
            total, total_sq = csum[-1], csq[-1]
            nl = (idx + 1).astype(float)
            nr = n - nl
            sl, sql = csum[idx], csq[idx]
            sse = (sql - sl * sl / nl) + ((total_sq - sql) - (total - sl) ** 2 / nr)
            j = int(np.argmin(sse))  # first minimum => lowest threshold
            if sse[j] < best_sse:
                best_sse = float(sse[j])
                t = 0.5 * (xv[idx[j]] + xv[idx[j] + 1])
                best = (int(f), float(t))
        return best

    def finish(self) -> TreeModel:
        return TreeModel(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=float),
            n_features=self.X.shape[1],
        )


def fit_cart(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int = 8,
    min_leaf: int = 1,
    feature_subset: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeModel:
    """Grow a variance-reduction binary tree; leaves predict the mean.

    A node splits whenever its target is impure and a split with both
    children >= min_leaf exists, even at zero gain (ties go to the lowest
    feature and threshold), so step/XOR patterns resolve at small depth.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size or y.size == 0:
        raise InsufficientDataError(
            f"X rows ({X.shape[0]}) and y length ({y.size}) must match and be nonzero"
        )
    if min_leaf < 1:
        raise ValidationError(f"min_leaf must be >= 1, got {min_leaf}")
    if rng is None:
        rng = np.random.default_rng(0)
    builder = _TreeBuilder(X, y, max_depth, min_leaf, feature_subset, rng)
    builder.build(np.arange(X.shape[0]), 0)
    return builder.finish()


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Lexicographic by feature columns then target: a content-derived
    # ordering, so bootstrap draws are invariant to the caller's row order.
    keys = (y,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


@dataclass
class ForestModel:
    trees: list[TreeModel]
    n_features: int
    feature_names: tuple[str, ...] | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "n_features": self.n_features,
            "feature_names": list(self.feature_names) if self.feature_names else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        names = doc.get("feature_names")
        return cls(
            trees=[TreeModel.from_dict(t) for t in doc["trees"]],
            n_features=int(doc["n_features"]),
            feature_names=tuple(names) if names else None,
        )


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 200,
    max_depth: int = 8,
    min_leaf: int = 2,
    feature_subset: int | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    feature_names: tuple[str, ...] | None = None,
) -> ForestModel:
    """Bagged trees with per-node feature subsampling.

    feature_subset defaults to ceil(sqrt(p)). With n_trees=1,
    bootstrap=False and feature_subset=p this degenerates to fit_cart.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if n_trees < 1:
        raise ValidationError(f"n_trees must be >= 1, got {n_trees}")
    if X.shape[0] != y.size or y.size == 0:
        raise InsufficientDataError("empty training data")
    if feature_subset is None:
        feature_subset = math.ceil(math.sqrt(X.shape[1]))

    order = _canonical_order(X, y)
    Xc, yc = X[order], y[order]
    n = Xc.shape[0]
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        if bootstrap:
            idx = rng.integers(0, n, size=n)
            Xb, yb = Xc[idx], yc[idx]
        else:
            Xb, yb = Xc, yc
        trees.append(fit_cart(Xb, yb, max_depth=max_depth, min_leaf=min_leaf,
                              feature_subset=feature_subset, rng=rng))
    return ForestModel(trees=trees, n_features=X.shape[1], feature_names=feature_names)


@dataclass
class GbModel:
    base_value: float
    trees: list[TreeModel]
    learning_rate: float
    n_features: int
    feature_names: tuple[str, ...] | None = None
    train_mse: list[float] = field(default_factory=list)  # per-round, incl. round 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.full(X.shape[0], self.base_value)
        for tree in self.trees:
            acc += self.learning_rate * tree.predict(X)
        return acc

    def to_dict(self) -> dict:
        return {
            "base_value": self.base_value,
            "trees": [t.to_dict() for t in self.trees],
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names) if self.feature_names else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbModel":
        names = doc.get("feature_names")
        return cls(
            base_value=float(doc["base_value"]),
            trees=[TreeModel.from_dict(t) for t in doc["trees"]],
            learning_rate=float(doc["learning_rate"]),
            n_features=int(doc["n_features"]),
            feature_names=tuple(names) if names else None,
        )


def fit_gradient_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_rounds: int = 200,
    learning_rate: float = 0.1,
    depth: int = 3,
    min_leaf: int = 1,
    seed: int = 0,
    feature_names: tuple[str, ...] | None = None,
) -> GbModel:
    """Stagewise least-squares boosting: F0 = mean(y), then shrunk
    residual trees. n_rounds=0 yields the constant mean predictor.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if n_rounds < 0:
        raise ValidationError(f"n_rounds must be >= 0, got {n_rounds}")
    if not 0.0 < learning_rate <= 1.0:
        raise ValidationError(f"learning_rate must be in (0, 1], got {learning_rate}")
    if X.shape[0] != y.size or y.size == 0:
        raise InsufficientDataError("empty training data")

    order = _canonical_order(X, y)
    Xc, yc = X[order], y[order]
    rng = np.random.default_rng(seed)
    base = float(yc.mean())
    current = np.full(yc.size, base)
    trees: list[TreeModel] = []
    mse = [float(np.mean((yc - current) ** 2))]
    for _ in range(n_rounds):
        residual = yc - current
        tree = fit_cart(Xc, residual, max_depth=depth, min_leaf=min_leaf, rng=rng)
        current = current + learning_rate * tree.predict(Xc)
        trees.append(tree)
        mse.append(float(np.mean((yc - current) ** 2)))
    return GbModel(base_value=base, trees=trees, learning_rate=learning_rate,
                   n_features=X.shape[1], feature_names=feature_names, train_mse=mse)
