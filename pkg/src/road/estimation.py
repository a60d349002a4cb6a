"""Sample statistics from labeled two-class data.

Class means, half mean difference and midpoint, pooled sample covariance,
per-feature two-sample t-statistics, and optional per-sample
standardization used for expression-array style inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantSample,
    DegenerateClass,
    DimensionMismatch,
    EmptyInput,
)

__all__ = ["LabeledData", "SampleEstimates", "estimate", "t_statistics", "standardize_samples"]


@dataclass(frozen=True)
class LabeledData:
    """n x p feature matrix with labels in {1, 2}; both classes non-empty."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=float)
        y = np.asarray(self.y)
        if x.ndim != 2:
            raise DimensionMismatch(f"x must be 2-d, got shape {x.shape}")
        if x.shape[0] == 0 or x.shape[1] == 0:
            raise EmptyInput("dataset has no samples or no features")
        if y.ndim != 1 or y.size != x.shape[0]:
            raise DimensionMismatch(f"y must have one label per row, got shape {y.shape}")
        if not np.all(np.isfinite(x)):
            raise DimensionMismatch("x contains non-finite entries")
        y = y.astype(np.int64)
        if not np.all((y == 1) | (y == 2)):
            raise DimensionMismatch("labels must be 1 or 2")
        if not (np.any(y == 1) and np.any(y == 2)):
            raise EmptyInput("both classes must be present")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def n1(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n2(self) -> int:
        return int(np.count_nonzero(self.y == 2))

    def class_rows(self, label: int) -> np.ndarray:
        return self.x[self.y == label]

    def subset_samples(self, idx) -> "LabeledData":
        idx = np.asarray(idx, dtype=int)
        return LabeledData(self.x[idx], self.y[idx])

    def subset_features(self, idx) -> "LabeledData":
        idx = np.asarray(idx, dtype=int)
        return LabeledData(self.x[:, idx], self.y)


@dataclass(frozen=True)
class SampleEstimates:
    """Class means, their half difference/midpoint, and pooled covariance."""

    mu1_hat: np.ndarray
    mu2_hat: np.ndarray
    mu_d_hat: np.ndarray
    mu_a_hat: np.ndarray
    sigma_hat: np.ndarray
    n1: int
    n2: int


def _require_two_per_class(data: LabeledData):
    if data.n1 < 2 or data.n2 < 2:
        raise DegenerateClass(
            f"need at least two samples per class, got n1={data.n1}, n2={data.n2}"
        )


def estimate(data: LabeledData) -> SampleEstimates:
    """Class means and the pooled sample covariance.

    The pooled estimate is ((n1-1) S1 + (n2-1) S2) / (n1+n2-2) with the
    per-class covariances on the unbiased n_k - 1 denominator.  It is
    positive semidefinite and, for n < p, rank-deficient; nothing here
    inverts it.
    """
    _require_two_per_class(data)
    x1 = data.class_rows(1)
    x2 = data.class_rows(2)
    mu1 = x1.mean(axis=0)
    mu2 = x2.mean(axis=0)
    c1 = x1 - mu1
    c2 = x2 - mu2
    pooled = (c1.T @ c1 + c2.T @ c2) / (data.n1 + data.n2 - 2)
    pooled = (pooled + pooled.T) / 2.0
    return SampleEstimates(
        mu1_hat=mu1,
        mu2_hat=mu2,
        mu_d_hat=(mu2 - mu1) / 2.0,
        mu_a_hat=(mu2 + mu1) / 2.0,
        sigma_hat=pooled,
        n1=data.n1,
        n2=data.n2,
    )


def pooled_diag_variance(data: LabeledData) -> np.ndarray:
    """Diagonal of the pooled covariance without forming the p x p matrix."""
    _require_two_per_class(data)
    x1 = data.class_rows(1)
    x2 = data.class_rows(2)
    s1 = ((x1 - x1.mean(axis=0)) ** 2).sum(axis=0)
    s2 = ((x2 - x2.mean(axis=0)) ** 2).sum(axis=0)
    return (s1 + s2) / (data.n1 + data.n2 - 2)


def t_statistics(data: LabeledData, pooled: bool = False) -> np.ndarray:
    """Per-feature two-sample t-statistics (class 2 minus class 1).

    Welch (unequal-variance) form by default; ``pooled=True`` switches to
    the pooled-variance form.  Features with zero variance in both
    classes get t = 0 when the means agree and a +/-inf sentinel
    otherwise.
    """
    _require_two_per_class(data)
    x1 = data.class_rows(1)
    x2 = data.class_rows(2)
    n1, n2 = data.n1, data.n2
    m1 = x1.mean(axis=0)
    m2 = x2.mean(axis=0)
    v1 = x1.var(axis=0, ddof=1)
    v2 = x2.var(axis=0, ddof=1)
    diff = m2 - m1
    if pooled:
        sp2 = ((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2)
        denom_sq = sp2 * (1.0 / n1 + 1.0 / n2)
    else:
        denom_sq = v1 / n1 + v2 / n2
    t = np.zeros(data.p)
    ok = denom_sq > 0.0
    t[ok] = diff[ok] / np.sqrt(denom_sq[ok])
    degenerate = ~ok & (diff != 0.0)
    t[degenerate] = np.sign(diff[degenerate]) * np.inf
    return t


def standardize_samples(data: LabeledData, ddof: int = 1) -> LabeledData:
    """Rescale every sample row to mean zero and unit variance.

    ``ddof=1`` uses the p-1 denominator (default); ``ddof=0`` divides by
    p.  Idempotent up to rounding.  Raises ``ConstantSample`` if any row
    has zero variance.
    """
    if data.p < 2:
        raise DimensionMismatch("per-sample standardization requires at least 2 features")
    centered = data.x - data.x.mean(axis=1, keepdims=True)
    sd = centered.std(axis=1, ddof=ddof, keepdims=True)
    if np.any(sd == 0.0):
        bad = int(np.argmax(sd.ravel() == 0.0))
        raise ConstantSample(f"sample row {bad} is constant")
    return LabeledData(centered / sd, data.y)
