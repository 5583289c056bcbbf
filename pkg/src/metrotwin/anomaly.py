"""Isolation forest anomaly detection over measurement feature rows.

Scoring follows the standard construction: per-tree path lengths with
the average-unsuccessful-BST-search adjustment c(size) at truncated
leaves, averaged over trees, mapped through s = 2^(-E[h]/c(psi)).

Tree growth consumes randomness in a documented order (subsample draw,
then per node: split attribute among non-constant columns, then split
value), depth-first left before right. That order is part of the
contract: the test suite re-enumerates the recursion over the same seed
sequence and must reproduce path lengths exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import MeasurementRecord, UM_PER_MM
from .errors import InsufficientDataError, ValidationError

__all__ = [
    "IsolationForest",
    "DetectionResult",
    "DetectionReport",
    "EULER_GAMMA",
    "harmonic",
    "average_path_length",
    "fit_isolation_forest",
    "anomaly_score",
    "detect",
    "detection_metrics",
    "detection_features",
    "DETECTION_FEATURE_NAMES",
]

EULER_GAMMA = 0.5772156649015329

# Feature layout for measurement-record detection.
DETECTION_FEATURE_NAMES = ("deviation_um", "nominal_mm", "device", "temperature_c")

_LEAF = -1


def harmonic(i: int) -> float:
    """H(i), exact below 10 where the log approximation is weakest."""
    if i <= 0:
        return 0.0
    if i < 10:
        return sum(1.0 / k for k in range(1, i + 1))
    return math.log(i) + EULER_GAMMA


def average_path_length(n: int) -> float:
    """c(n): expected unsuccessful-search path length in a BST of n points."""
    if n <= 1:
        return 0.0
    return 2.0 * harmonic(n - 1) - 2.0 * (n - 1) / n


@dataclass
class _IsoTree:
    feature: np.ndarray  # _LEAF marks an external node
    split: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray  # external node sizes

    def path_lengths(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        depth = np.zeros(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat != _LEAF
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            go_left = X[rows, feat[rows]] < self.split[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
            depth[rows] += 1.0
        ext = self.size[node]
        return depth + np.array([average_path_length(int(s)) for s in ext])


class _IsoTreeBuilder:
    def __init__(self, X: np.ndarray, height_limit: int, rng: np.random.Generator):
        self.X = X
        self.height_limit = height_limit
        self.rng = rng
        self.feature: list[int] = []
        self.split: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.size: list[int] = []

    def build(self, rows: np.ndarray, height: int) -> int:
        node = len(self.feature)
        self.feature.append(_LEAF)
        self.split.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.size.append(rows.size)

        if height >= self.height_limit or rows.size <= 1:
            return node
        sub = self.X[rows]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        candidates = np.nonzero(lo < hi)[0]
        if candidates.size == 0:  # all remaining rows identical
            return node
        q = int(candidates[self.rng.integers(0, candidates.size)])
        p = float(self.rng.uniform(lo[q], hi[q]))
        go_left = sub[:, q] < p
        self.feature[node] = q
        self.split[node] = p
        self.left[node] = self.build(rows[go_left], height + 1)
        self.right[node] = self.build(rows[~go_left], height + 1)
        return node

    def finish(self) -> _IsoTree:
        return _IsoTree(
            feature=np.asarray(self.feature, dtype=np.int64),
            split=np.asarray(self.split, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            size=np.asarray(self.size, dtype=np.int64),
        )


@dataclass
class IsolationForest:
    trees: list[_IsoTree]
    subsample_size: int
    n_trees: int
    normalizer: float  # c(psi)
    n_features: int
    threshold: float | None = None  # set by detect() from training scores
    feature_names: tuple[str, ...] | None = None

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.path_lengths(X)
        expected = acc / len(self.trees)
        return np.power(2.0, -expected / self.normalizer)


def fit_isolation_forest(
    data: np.ndarray,
    n_trees: int = 100,
    psi: int | None = None,
    seed: int = 0,
    feature_names: tuple[str, ...] | None = None,
) -> IsolationForest:
    """Fit isolation trees on psi-subsamples (default min(256, n))."""
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise InsufficientDataError(f"need at least 2 rows, got {n}")
    if n_trees < 1:
        raise ValidationError(f"n_trees must be >= 1, got {n_trees}")
    if psi is None:
        psi = min(256, n)
    if not 2 <= psi <= n:
        raise ValidationError(f"psi must be in [2, {n}], got {psi}")

    height_limit = math.ceil(math.log2(psi))
    trees = []
    for ss in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(ss)
        sample = rng.choice(n, size=psi, replace=False)
        builder = _IsoTreeBuilder(X[sample], height_limit, rng)
        builder.build(np.arange(psi), 0)
        trees.append(builder.finish())
    return IsolationForest(
        trees=trees,
        subsample_size=psi,
        n_trees=n_trees,
        normalizer=average_path_length(psi),
        n_features=X.shape[1],
        feature_names=feature_names,
    )


def anomaly_score(forest: IsolationForest, x: np.ndarray) -> float:
    """Score one row; higher means shorter isolation paths."""
    return float(forest.scores(np.atleast_2d(x))[0])


@dataclass(frozen=True)
class DetectionResult:
    flagged_ids: tuple
    flags: np.ndarray  # boolean, aligned with the scored rows
    scores: np.ndarray
    threshold: float
    contamination: float


def detect(
    forest: IsolationForest,
    data: np.ndarray,
    contamination: float = 0.05,
    ids: Sequence | None = None,
) -> DetectionResult:
    """Flag the top contamination fraction by score.

    The threshold is the (1 - contamination) quantile of the scores of
    ``data`` (normally the training rows) and is stored on the forest for
    later single-row checks. Ties at the threshold break by ascending id,
    so flag sets are deterministic and monotone in contamination.
    """
    if not 0.0 < contamination < 0.5:
        raise ValidationError(
            f"contamination must be in (0, 0.5), got {contamination}"
        )
    X = np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    if ids is None:
        ids = list(range(n))
    if len(ids) != n:
        raise ValidationError(f"got {len(ids)} ids for {n} rows")
    scores = forest.scores(X)
    k = max(1, int(round(contamination * n)))
    order = sorted(range(n), key=lambda i: (-scores[i], ids[i]))
    chosen = order[:k]
    threshold = float(scores[chosen[-1]])
    flags = np.zeros(n, dtype=bool)
    flags[chosen] = True
    forest.threshold = threshold
    return DetectionResult(
        flagged_ids=tuple(ids[i] for i in sorted(chosen, key=lambda i: ids[i])),
        flags=flags,
        scores=scores,
        threshold=threshold,
        contamination=contamination,
    )


@dataclass(frozen=True)
class DetectionReport:
    tpr: float
    fpr: float
    f1: float
    flagged_ids: tuple

    def to_dict(self) -> dict:
        return {"tpr": self.tpr, "fpr": self.fpr, "f1": self.f1,
                "flagged_ids": list(self.flagged_ids)}


def detection_metrics(flagged_ids: Sequence, labels) -> DetectionReport:
    """TPR/FPR/F1 of a flag set against ground-truth anomaly labels.

    ``labels`` is a sequence of objects with record_id and is_anomaly
    (campaign AnomalyLabel works); flagged ids must be a subset of the
    labeled ids.
    """
    truth = {lab.record_id: bool(lab.is_anomaly) for lab in labels}
    flagged = set(flagged_ids)
    unknown = flagged - truth.keys()
    if unknown:
        raise ValidationError(f"flags reference unlabeled ids: {sorted(unknown)[:5]}")
    positives = sum(truth.values())
    if positives == 0:
        raise ValidationError("no positive labels; TPR is undefined")
    tp = sum(1 for rid in flagged if truth[rid])
    fp = len(flagged) - tp
    fn = positives - tp
    tn = len(truth) - positives - fp
    tpr = tp / (tp + fn)
    fpr = fp / (fp + tn) if (fp + tn) > 0 else 0.0
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    f1 = (2 * precision * tpr / (precision + tpr)) if (precision + tpr) > 0 else 0.0
    return DetectionReport(tpr=tpr, fpr=fpr, f1=f1,
                           flagged_ids=tuple(sorted(flagged)))


def detection_features(records: Sequence[MeasurementRecord]) -> np.ndarray:
    """Rows of (deviation um, nominal mm, device code, temperature C)."""
    return np.array(
        [
            (rec.deviation * UM_PER_MM, rec.nominal_value,
             rec.device.regression_code, rec.temperature)
            for rec in records
        ],
        dtype=float,
    )
