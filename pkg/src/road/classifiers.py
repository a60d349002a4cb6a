"""End-to-end sparse discriminant classifiers.

Fitting runs the coordinate-descent path on pooled sample estimates,
picks the penalty by stratified k-fold cross-validation over a shared
grid, and refits on the full data.  Variants swap the pooled covariance
for its diagonal (independence rule) or screen features first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ccd import CcdConfig, CcdProblem
from .errors import (
    DegenerateClass,
    DegenerateDirection,
    DimensionMismatch,
)
from .estimation import LabeledData, SampleEstimates, estimate
from .numerics import RngStream, gaussian_cdf
from .screening import ScreeningResult, expand_correlated, permutation_screen, top_k_screen

__all__ = [
    "LinearClassifier",
    "CvResult",
    "fit_road",
    "fit_droad",
    "fit_sroad",
    "classify",
    "predict",
    "estimate_error",
    "test_error",
]


@dataclass(frozen=True)
class LinearClassifier:
    """Fitted linear rule: label 2 iff w'(x - mu_a) > 0, ties to class 1.

    ``w`` always has full length p, with zeros outside any screened
    subset; ``support`` lists the nonzero coordinates.
    """

    w: np.ndarray
    mu_a_hat: np.ndarray
    chosen_lambda: float | None
    method: str
    support: np.ndarray
    gamma: float | None = None
    screening: ScreeningResult | None = None
    fallback_used: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.w.size


@dataclass(frozen=True)
class CvResult:
    """Cross-validation record over the shared penalty grid.

    ``fold_errors`` is folds x grid validation error rates;
    ``chosen_index`` minimizes the fold mean with ties resolved toward
    the larger penalty (sparser model).  ``one_se_index`` is the sparsest
    grid point within one standard error of the minimum.
    """

    lambdas: np.ndarray
    fold_errors: np.ndarray
    mean_errors: np.ndarray
    chosen_index: int
    one_se_index: int

    @property
    def chosen_lambda(self) -> float:
        return float(self.lambdas[self.chosen_index])

    @property
    def cv_error(self) -> float:
        return float(self.mean_errors[self.chosen_index])


def _stratified_folds(y: np.ndarray, folds: int, rng: RngStream):
    """Deterministic stratified fold assignment from a seeded shuffle."""
    gen = rng.generator()
    assignment = np.empty(y.size, dtype=int)
    for label in (1, 2):
        idx = np.flatnonzero(y == label)
        gen.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % folds
    return [
        (np.flatnonzero(assignment != f), np.flatnonzero(assignment == f))
        for f in range(folds)
    ]


def _check_cv_inputs(data: LabeledData, folds: int):
    if folds < 2:
        raise DimensionMismatch(f"cross-validation needs at least 2 folds, got {folds}")
    if data.n1 < folds or data.n2 < folds:
        raise DegenerateClass(
            f"each class needs at least {folds} samples for {folds}-fold splits"
        )


def _fit_pathwise(data: LabeledData, config: CcdConfig, folds: int, rng: RngStream,
                  diagonal: bool, method: str):
    """Shared pipeline for the pooled-covariance and diagonal variants."""
    _check_cv_inputs(data, folds)
    est = estimate(data)
    sigma = np.diag(np.diag(est.sigma_hat)) if diagonal else est.sigma_hat
    problem = CcdProblem(sigma, est.mu_d_hat, config)
    grid = problem.lambda_grid()
    path = problem.solve_path(lambdas=grid)

    k = grid.size
    fold_pairs = _stratified_folds(data.y, folds, rng)
    fold_errors = np.empty((folds, k))
    for f, (train_idx, val_idx) in enumerate(fold_pairs):
        dtr = data.subset_samples(train_idx)
        est_f = estimate(dtr)
        sigma_f = np.diag(np.diag(est_f.sigma_hat)) if diagonal else est_f.sigma_hat
        path_f = CcdProblem(sigma_f, est_f.mu_d_hat, config).solve_path(lambdas=grid)
        margins = (data.x[val_idx] - est_f.mu_a_hat) @ path_f.weights
        pred = np.where(margins > 0.0, 2, 1)
        fold_errors[f] = (pred != data.y[val_idx, None]).mean(axis=0)

    mean_errors = fold_errors.mean(axis=0)
    chosen = int(np.argmin(mean_errors))  # first minimum = largest penalty
    se = float(fold_errors[:, chosen].std(ddof=1)) / np.sqrt(folds) if folds > 1 else 0.0
    within = np.flatnonzero(mean_errors <= mean_errors[chosen] + se)
    one_se = int(within[0])

    w = path.points[chosen].w
    clf = LinearClassifier(
        w=w,
        mu_a_hat=est.mu_a_hat,
        chosen_lambda=float(grid[chosen]),
        method=method,
        support=np.flatnonzero(w),
        gamma=config.gamma,
    )
    cv = CvResult(
        lambdas=grid,
        fold_errors=fold_errors,
        mean_errors=mean_errors,
        chosen_index=chosen,
        one_se_index=one_se,
    )
    return clf, cv


def fit_road(data: LabeledData, config: CcdConfig | None = None, folds: int = 5,
             rng: RngStream = RngStream(0)):
    """Fit the pooled-covariance sparse discriminant with CV over the grid.

    The penalty grid is anchored at the full-data lambda_max and shared
    across folds so fold errors line up per grid point; ties in CV error
    go to the larger penalty, and the final model is refit on all data
    at the chosen penalty.
    """
    config = config if config is not None else CcdConfig()
    return _fit_pathwise(data, config, folds, rng, diagonal=False, method="road")


def fit_droad(data: LabeledData, config: CcdConfig | None = None, folds: int = 5,
              rng: RngStream = RngStream(0)):
    """Same pipeline with the pooled covariance replaced by its diagonal."""
    config = config if config is not None else CcdConfig()
    return _fit_pathwise(data, config, folds, rng, diagonal=True, method="droad")


def fit_sroad(data: LabeledData, variant: int, q: float = 1.0, per_feature: int = 1,
              config: CcdConfig | None = None, folds: int = 5,
              rng: RngStream = RngStream(0)):
    """Screen features, then fit the pooled-covariance rule on the survivors.

    Variant 1 uses the permutation screen alone; variant 2 additionally
    adds each survivor's most correlated features before fitting.  An
    empty screen falls back to the single best |t| feature and flags the
    classifier.  The returned weight vector is embedded back into full
    length with zeros off the selected set.
    """
    if variant not in (1, 2):
        raise DimensionMismatch(f"variant must be 1 or 2, got {variant}")
    config = config if config is not None else CcdConfig()
    scr = permutation_screen(data, q, rng.substream(0))
    selected = scr.selected
    fallback = selected.size == 0
    if fallback:
        selected = top_k_screen(data, 1)
    if variant == 2:
        selected = np.sort(expand_correlated(data, selected, per_feature))
    reduced = data.subset_features(selected)
    clf_sub, cv = _fit_pathwise(
        reduced, config, folds, rng.substream(1), diagonal=False,
        method=f"sroad{variant}",
    )
    w = np.zeros(data.p)
    w[selected] = clf_sub.w
    mu_a = np.zeros(data.p)
    mu_a[selected] = clf_sub.mu_a_hat
    clf = LinearClassifier(
        w=w,
        mu_a_hat=mu_a,
        chosen_lambda=clf_sub.chosen_lambda,
        method=f"sroad{variant}",
        support=selected[clf_sub.support],
        gamma=config.gamma,
        screening=scr,
        fallback_used=fallback,
    )
    return clf, cv


def classify(clf: LinearClassifier, x) -> int:
    """Label one observation: 2 iff w'(x - mu_a) > 0, else 1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (clf.p,):
        raise DimensionMismatch(f"observation has shape {x.shape}, expected ({clf.p},)")
    return 2 if float(clf.w @ (x - clf.mu_a_hat)) > 0.0 else 1


def predict(clf: LinearClassifier, x) -> np.ndarray:
    """Vectorized labels for an n x p matrix of observations."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != clf.p:
        raise DimensionMismatch(f"observations have {x.shape[1]} features, expected {clf.p}")
    margins = (x - clf.mu_a_hat) @ clf.w
    return np.where(margins > 0.0, 2, 1).astype(np.int64)


def estimate_error(clf: LinearClassifier, est: SampleEstimates) -> float:
    """Plug-in misclassification estimate from the sample quantities.

    Returns 1 - Phi(w'mu_d / sqrt(w' Sigma w)) with every quantity
    replaced by its sample version.  A rank-deficient pooled covariance
    can make the variance term vanish; that degenerate case raises.
    """
    if est.mu_d_hat.size != clf.p:
        raise DimensionMismatch("estimates and classifier dimensions differ")
    quad = float(clf.w @ est.sigma_hat @ clf.w)
    scale = float(np.abs(est.sigma_hat).max()) * float(clf.w @ clf.w)
    if quad <= 1e-14 * scale:
        raise DegenerateDirection(
            "fitted direction has non-positive estimated variance "
            "(rank-deficient pooled covariance)"
        )
    margin = float(clf.w @ est.mu_d_hat) / np.sqrt(quad)
    return float(1.0 - gaussian_cdf(margin))


def test_error(clf: LinearClassifier, test: LabeledData) -> float:
    """Fraction of test samples the classifier labels incorrectly."""
    if test.p != clf.p:
        raise DimensionMismatch("test data and classifier dimensions differ")
    return float(np.mean(predict(clf, test.x) != test.y))
