"""Permutation-calibrated t-statistic screening and correlation expansion.

The screen decouples features from labels with a random permutation of
the sample rows, recomputes the per-feature t-statistics on the permuted
pairs, and keeps features whose original |t| reaches the chosen quantile
of the permuted |t| distribution.  A second step can grow the selected
set with the features most correlated to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyBase
from .estimation import LabeledData, t_statistics
from .numerics import RngStream, empirical_quantile

__all__ = ["ScreeningResult", "permutation_screen", "expand_correlated", "top_k_screen"]


@dataclass(frozen=True)
class ScreeningResult:
    """Outcome of one permutation screen.

    ``selected`` holds the indices j with |t_j| >= threshold, in
    ascending order.  ``permutation_seed`` records the (seed, stream)
    key of the stream that drew the permutation, or None when an
    explicit permutation was supplied.
    """

    t_abs: np.ndarray
    threshold: float
    q: float
    selected: np.ndarray
    permutation_seed: tuple | None


def permutation_screen(
    data: LabeledData,
    q: float,
    rng: RngStream,
    repetitions: int = 1,
    pooled: bool = False,
    permutation=None,
) -> ScreeningResult:
    """Select features whose |t| reaches the permuted-data quantile.

    One row permutation decouples features from labels; the threshold is
    the q-th lower order-statistic quantile of the permuted |t| values.
    ``repetitions`` > 1 averages thresholds over that many independent
    permutations for stability.  Passing an explicit ``permutation``
    (test hook) bypasses the rng; the identity permutation makes the
    threshold the quantile of the original |t| themselves.
    """
    if not 0.0 <= q <= 1.0:
        raise DimensionMismatch(f"quantile level must be in [0, 1], got {q}")
    if repetitions < 1:
        raise DimensionMismatch("repetitions must be at least 1")
    t_abs = np.abs(t_statistics(data, pooled=pooled))
    gen = rng.generator()
    thresholds = []
    for _ in range(repetitions):
        if permutation is None:
            perm = gen.permutation(data.n)
        else:
            perm = np.asarray(permutation, dtype=int)
            if perm.size != data.n:
                raise DimensionMismatch("permutation length must match sample count")
        permuted = LabeledData(data.x[perm], data.y)
        t_star = np.abs(t_statistics(permuted, pooled=pooled))
        thresholds.append(empirical_quantile(t_star, q))
    threshold = float(np.mean(thresholds))
    selected = np.flatnonzero(t_abs >= threshold)
    return ScreeningResult(
        t_abs=t_abs,
        threshold=threshold,
        q=q,
        selected=selected,
        permutation_seed=None if permutation is not None else (rng.seed, rng.stream),
    )


def _within_class_correlation(data: LabeledData) -> np.ndarray:
    """Correlations of residuals after removing class means.

    Plain correlations would be contaminated by the between-class mean
    shift; zero-variance features get zero correlation.
    """
    resid = data.x.copy()
    for label in (1, 2):
        rows = data.y == label
        resid[rows] -= resid[rows].mean(axis=0)
    sd = resid.std(axis=0)
    ok = sd > 0.0
    scaled = np.zeros_like(resid)
    scaled[:, ok] = resid[:, ok] / sd[ok]
    corr = scaled.T @ scaled / resid.shape[0]
    np.fill_diagonal(corr, 1.0)
    return corr


def expand_correlated(
    data: LabeledData,
    base,
    per_feature: int = 1,
    raw: bool = False,
) -> np.ndarray:
    """Grow a feature set with each member's most correlated outsiders.

    For every index in ``base`` (kept first, in the given order), the
    ``per_feature`` features outside the base with largest absolute
    correlation to it are appended; duplicates collapse and exact ties
    break toward the lower index.  ``raw=True`` uses plain correlations
    instead of the pooled within-class ones.
    """
    base = np.asarray(base, dtype=int).ravel()
    if base.size == 0:
        raise EmptyBase("base feature set is empty")
    if per_feature < 1:
        raise DimensionMismatch("per_feature must be at least 1")
    if base.min() < 0 or base.max() >= data.p:
        raise DimensionMismatch("base indices out of range")
    if raw:
        x = data.x
        sd = x.std(axis=0)
        ok = sd > 0.0
        centered = x - x.mean(axis=0)
        scaled = np.zeros_like(centered)
        scaled[:, ok] = centered[:, ok] / sd[ok]
        corr = scaled.T @ scaled / x.shape[0]
        np.fill_diagonal(corr, 1.0)
    else:
        corr = _within_class_correlation(data)

    in_base = np.zeros(data.p, dtype=bool)
    in_base[base] = True
    outside = np.flatnonzero(~in_base)
    chosen: list[int] = list(dict.fromkeys(int(j) for j in base))
    seen = set(chosen)
    if outside.size:
        for j in base:
            strengths = np.abs(corr[j, outside])
            # stable ordering: strength descending, index ascending on ties
            order = np.lexsort((outside, -strengths))
            for k in order[: min(per_feature, outside.size)]:
                cand = int(outside[k])
                if cand not in seen:
                    seen.add(cand)
                    chosen.append(cand)
    return np.array(chosen, dtype=int)


def top_k_screen(data: LabeledData, k: int, pooled: bool = False) -> np.ndarray:
    """Indices of the k largest |t| values, ties toward the lower index."""
    if not 1 <= k <= data.p:
        raise DimensionMismatch(f"k must lie in [1, {data.p}], got {k}")
    t_abs = np.abs(t_statistics(data, pooled=pooled))
    order = np.lexsort((np.arange(data.p), -t_abs))
    return np.sort(order[:k])
