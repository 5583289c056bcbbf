"""Descriptive statistics, paired t-test, one-way ANOVA, and OLS
regression with coefficient inference.

All inputs are mm-valued sequences; angle features (degrees) must be
filtered out before pooling, which ``regression_design`` does for
measurement records. p-values come from the local incomplete-beta
implementation in :mod:`metrotwin.special`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FeatureKind, MeasurementRecord
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    SingularDesignError,
    ValidationError,
)
from .special import f_sf, student_t_ppf, student_t_two_sided_p

__all__ = [
    "DescriptiveStats",
    "TTestResult",
    "AnovaResult",
    "RegressionResult",
    "descriptive_stats",
    "paired_t_test",
    "anova_oneway",
    "ols_fit",
    "regression_design",
    "REGRESSION_TERMS",
]

# Column order of the measurement-deviation design matrix (after intercept).
REGRESSION_TERMS = ("intercept", "nominal", "device", "temperature")

_RANK_TOL = 1e-10  # relative threshold on QR diagonal for rank detection


@dataclass(frozen=True)
class DescriptiveStats:
    n: int
    mean: float
    sample_std: float  # n-1 denominator
    range: float
    ci95: tuple[float, float]  # Student-t CI for the mean
    pi95: tuple[float, float]  # 95% predictive interval for one new value


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    df: int
    p_value: float


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float


@dataclass(frozen=True)
class RegressionResult:
    terms: tuple[str, ...]
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n: int

    def coefficient(self, term: str) -> float:
        return float(self.coefficients[self.terms.index(term)])

    def std_error(self, term: str) -> float:
        return float(self.std_errors[self.terms.index(term)])

    def p_value(self, term: str) -> float:
        return float(self.p_values[self.terms.index(term)])

    def ci95(self, term: str) -> tuple[float, float]:
        i = self.terms.index(term)
        half = student_t_ppf(0.975, self.n - len(self.terms)) * float(self.std_errors[i])
        c = float(self.coefficients[i])
        return (c - half, c + half)


def descriptive_stats(values: Sequence[float]) -> DescriptiveStats:
    """Mean, n-1 standard deviation, range, and 95% Student-t intervals.

    ``ci95`` is the confidence interval for the mean; ``pi95`` is the
    predictive interval for a single future observation (wider by a
    factor sqrt(1 + 1/n)), reported alongside because summary tables in
    this domain are often quoted either way.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValidationError("values must be one-dimensional")
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("values must all be finite")
    n = int(x.size)
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    spread = float(np.max(x) - np.min(x))
    t975 = student_t_ppf(0.975, n - 1)
    half_ci = t975 * std / math.sqrt(n)
    half_pi = t975 * std * math.sqrt(1.0 + 1.0 / n)
    return DescriptiveStats(
        n=n,
        mean=mean,
        sample_std=std,
        range=spread,
        ci95=(mean - half_ci, mean + half_ci),
        pi95=(mean - half_pi, mean + half_pi),
    )


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Paired t-test on matched samples: t = mean(d) / (std(d)/sqrt(n))."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(
            f"paired samples must be 1-D and the same length, got "
            f"{x.shape} vs {y.shape}"
        )
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 pairs, got {x.size}")
    d = x - y
    mean_d = float(np.mean(d))
    std_d = float(np.std(d, ddof=1))
    n = int(d.size)
    if std_d == 0.0:
        if mean_d == 0.0:
            return TTestResult(t_stat=0.0, df=n - 1, p_value=1.0)
        raise DegenerateInputError(
            "differences have zero variance but nonzero mean; t is undefined"
        )
    t = mean_d / (std_d / math.sqrt(n))
    return TTestResult(t_stat=t, df=n - 1, p_value=student_t_two_sided_p(t, n - 1))


def anova_oneway(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """One-way ANOVA across two or more groups."""
    if len(groups) < 2:
        raise InsufficientDataError(f"need at least 2 groups, got {len(groups)}")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    for i, g in enumerate(arrays):
        if g.size < 2:
            raise InsufficientDataError(f"group {i} has {g.size} values; need >= 2")
    all_values = np.concatenate(arrays)
    grand_mean = float(np.mean(all_values))
    n_total = int(all_values.size)
    k = len(arrays)

    ss_between = sum(g.size * (float(np.mean(g)) - grand_mean) ** 2 for g in arrays)
    ss_within = sum(float(np.sum((g - np.mean(g)) ** 2)) for g in arrays)
    df_between = k - 1
    df_within = n_total - k

    ms_within = ss_within / df_within
    if ms_within == 0.0:
        if ss_between == 0.0:
            raise DegenerateInputError(
                "zero variance within and between groups; F is undefined"
            )
        # Identical values within groups but distinct means: infinite evidence.
        return AnovaResult(math.inf, df_between, df_within, 0.0)
    f = (ss_between / df_between) / ms_within
    return AnovaResult(
        f_stat=f,
        df_between=df_between,
        df_within=df_within,
        p_value=f_sf(f, df_between, df_within),
    )


def ols_fit(
    X: np.ndarray,
    y: np.ndarray,
    terms: tuple[str, ...] = REGRESSION_TERMS,
) -> RegressionResult:
    """OLS with an intercept prepended, solved by QR for conditioning.

    ``X`` holds one row per observation with the non-intercept columns;
    the default layout is (nominal mm, device in {0,1}, temperature C)
    under the device coding CMM=1 / FaroArm=0. Standard errors come from
    sigma^2 (X'X)^-1 and p-values from the Student-t distribution with
    n - p degrees of freedom.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D matrix")
    if y.ndim != 1 or y.size != X.shape[0]:
        raise ValidationError(
            f"y length {y.size} does not match X rows {X.shape[0]}"
        )
    n = X.shape[0]
    design = np.column_stack([np.ones(n), X])
    p = design.shape[1]
    if len(terms) != p:
        raise ValidationError(
            f"expected {p} term names (incl. intercept), got {len(terms)}"
        )
    if n <= p + 1:
        raise InsufficientDataError(
            f"need more than p + 1 = {p + 1} rows to fit and infer, got {n}"
        )

    q, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    if np.any(diag < _RANK_TOL * diag.max()):
        col = int(np.argmin(diag))
        raise SingularDesignError(
            f"design matrix is rank deficient at column {col} "
            f"({terms[col]!r})", column=col,
        )
    beta = np.linalg.solve(r, q.T @ y)

    residuals = y - design @ beta
    sse = float(residuals @ residuals)
    df_resid = n - p
    sigma2 = sse / df_resid
    # (X'X)^-1 via R: X'X = R'R.
    r_inv = np.linalg.inv(r)
    xtx_inv = r_inv @ r_inv.T
    std_errors = np.sqrt(sigma2 * np.diag(xtx_inv))

    with np.errstate(divide="ignore"):
        t_stats = np.where(std_errors > 0, beta / std_errors, np.inf)
    p_values = np.array(
        [student_t_two_sided_p(float(t), df_resid) if math.isfinite(t) else 0.0
         for t in t_stats]
    )

    sst = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - sse / sst if sst > 0 else 1.0
    return RegressionResult(
        terms=tuple(terms),
        coefficients=beta,
        std_errors=std_errors,
        t_stats=t_stats,
        p_values=p_values,
        r_squared=r_squared,
        n=n,
    )


def regression_design(
    records: Sequence[MeasurementRecord],
    feature_kinds: dict[str, FeatureKind] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) for the pooled deviation regression, angles excluded.

    Angle features are recorded in degrees; pooling them with mm-valued
    deviations would be dimensionally invalid, so they are dropped. The
    feature kind is read from the record itself (generated records are
    self-describing) or from ``feature_kinds`` keyed by feature_id.
    """
    rows = []
    targets = []
    for rec in records:
        if _is_angle_record(rec, feature_kinds):
            continue
        rows.append((rec.nominal_value, rec.device.regression_code, rec.temperature))
        targets.append(rec.deviation)
    if not rows:
        raise InsufficientDataError("no mm-valued records to regress on")
    return np.array(rows, dtype=float), np.array(targets, dtype=float)


def _is_angle_record(
    rec: MeasurementRecord,
    feature_kinds: dict[str, FeatureKind] | None,
) -> bool:
    if rec.extra.get("feature_kind") == FeatureKind.ANGLE.value:
        return True
    if feature_kinds is not None:
        return feature_kinds.get(rec.feature_id) is FeatureKind.ANGLE
    return False
