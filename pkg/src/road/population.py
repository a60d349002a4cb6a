"""Exact population-level classification theory for two Gaussian classes.

Misclassification formulas for arbitrary linear rules, Fisher and
independence (naive Bayes) rates, their efficiency ratio, restricted
rules on feature subsets, and the closed forms for equicorrelation
covariances that make dimension-1000 curves exact and instant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySubset,
    InvalidRho,
    NonPositiveEigenvalue,
    ZeroDirection,
)
from .numerics import as_sym_matrix, as_vector, gaussian_cdf, sym_solve

__all__ = [
    "PopulationModel",
    "TheoreticalRates",
    "classifier_error",
    "fisher_rates",
    "two_feature_delta",
    "efficiency_ratio_equal_loading",
    "restricted_fisher_error",
    "equicorr_delta",
    "figure1_table",
    "FIGURE1_SIGNAL",
    "FIGURE1_DIM",
]


@dataclass(frozen=True)
class PopulationModel:
    """Two-class Gaussian model with common covariance.

    ``mu_d = (mu2 - mu1) / 2`` is the half mean difference and
    ``mu_a = (mu2 + mu1) / 2`` the midpoint.  Positive definiteness of
    ``sigma`` is decided by the factorization wherever an inverse is
    actually needed, not at construction.
    """

    mu1: np.ndarray
    mu2: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu1", as_vector(self.mu1, "mu1"))
        object.__setattr__(self, "mu2", as_vector(self.mu2, "mu2"))
        object.__setattr__(self, "sigma", as_sym_matrix(self.sigma, "sigma"))
        if self.mu1.size != self.mu2.size or self.sigma.shape[0] != self.mu1.size:
            raise DimensionMismatch(
                f"inconsistent dimensions: mu1 {self.mu1.size}, mu2 {self.mu2.size}, "
                f"sigma {self.sigma.shape}"
            )

    @property
    def p(self) -> int:
        return self.mu1.size

    @property
    def mu_d(self) -> np.ndarray:
        return (self.mu2 - self.mu1) / 2.0

    @property
    def mu_a(self) -> np.ndarray:
        return (self.mu2 + self.mu1) / 2.0

    @classmethod
    def from_mean_difference(cls, mu_d, sigma) -> "PopulationModel":
        """Model with midpoint zero and the given half mean difference."""
        mu_d = as_vector(mu_d, "mu_d")
        return cls(mu1=-mu_d, mu2=mu_d, sigma=sigma)


@dataclass(frozen=True)
class TheoreticalRates:
    """Fisher and naive-Bayes population quantities for one model.

    ``delta_p`` drives the Fisher rate, ``gamma_p`` the independence-rule
    rate, and their ratio (>= 1 by Cauchy-Schwarz) measures how much the
    covariance information is worth.
    """

    delta_p: float
    gamma_p: float
    fisher_error: float
    nb_error: float
    efficiency_ratio: float


def classifier_error(w, model: PopulationModel) -> float:
    """Exact misclassification rate of the linear rule with direction w.

    Equals ``1 - Phi(w.mu_d / sqrt(w' Sigma w))`` for the rule that
    thresholds ``w'(x - mu_a)`` at zero; scale-invariant in w.
    """
    w = as_vector(w, "w")
    if w.size != model.p:
        raise DimensionMismatch(f"w has length {w.size}, model dimension is {model.p}")
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ZeroDirection("projection direction must be nonzero")
    quad = float(w @ model.sigma @ w)
    if quad <= 0.0:
        raise ZeroDirection("direction has non-positive variance under sigma")
    margin = float(w @ model.mu_d) / np.sqrt(quad)
    return float(1.0 - gaussian_cdf(margin))


def fisher_rates(model: PopulationModel) -> TheoreticalRates:
    """Fisher vs naive-Bayes error rates and their efficiency ratio."""
    mu_d = model.mu_d
    fisher_dir = sym_solve(model.sigma, mu_d)
    delta = float(fisher_dir @ mu_d)
    quad = float(mu_d @ model.sigma @ mu_d)
    norm_sq = float(mu_d @ mu_d)
    gamma = norm_sq**2 / quad if quad > 0.0 else 0.0
    ratio = delta / gamma if gamma > 0.0 else 1.0
    return TheoreticalRates(
        delta_p=delta,
        gamma_p=gamma,
        fisher_error=float(1.0 - gaussian_cdf(np.sqrt(max(delta, 0.0)))),
        nb_error=float(1.0 - gaussian_cdf(np.sqrt(max(gamma, 0.0)))),
        efficiency_ratio=ratio,
    )


def two_feature_delta(mu, rho: float) -> float:
    """Fisher exponent for two unit-variance features with correlation rho.

    Closed form (mu1^2 + mu2^2 - 2 rho mu1 mu2) / (1 - rho^2).
    """
    mu = as_vector(mu, "mu")
    if mu.size != 2:
        raise DimensionMismatch(f"expected a length-2 mean vector, got {mu.size}")
    if not -1.0 < rho < 1.0:
        raise InvalidRho(f"two-feature correlation must lie in (-1, 1), got {rho}")
    m1, m2 = mu
    return float((m1 * m1 + m2 * m2 - 2.0 * rho * m1 * m2) / (1.0 - rho * rho))


def efficiency_ratio_equal_loading(eigenvalues) -> float:
    """Fisher-over-naive-Bayes ratio when mu_d loads equally on all eigenvectors.

    The input spectrum is rescaled to sum to p (correlation-matrix
    normalization); the ratio is then the mean of the reciprocal
    eigenvalues.
    """
    lam = as_vector(eigenvalues, "eigenvalues")
    if np.any(lam <= 0.0):
        raise NonPositiveEigenvalue("all eigenvalues must be strictly positive")
    p = lam.size
    lam = lam * (p / lam.sum())
    return float(np.mean(1.0 / lam))


def restricted_fisher_error(model: PopulationModel, subset) -> float:
    """Best possible error using only the given feature subset.

    Uses the subset block of sigma and the matching coordinates of mu_d;
    with the full feature set this reduces to the Fisher error.
    """
    idx = np.asarray(subset, dtype=int).ravel()
    if idx.size == 0:
        raise EmptySubset("feature subset is empty")
    if idx.min() < 0 or idx.max() >= model.p:
        raise DimensionMismatch("subset indices out of range")
    mu_s = model.mu_d[idx]
    sigma_s = model.sigma[np.ix_(idx, idx)]
    delta_s = float(sym_solve(sigma_s, mu_s) @ mu_s)
    return float(1.0 - gaussian_cdf(np.sqrt(max(delta_s, 0.0))))


def equicorr_delta(mu_d, rho: float) -> float:
    """Fisher exponent mu_d' Sigma^{-1} mu_d for an equicorrelation Sigma.

    Sherman-Morrison closed form for Sigma = (1-rho) I + rho 11', exact
    for any dimension and free of order-p^3 solves:

        (1/(1-rho)) * (||mu_d||^2 - rho (1'mu_d)^2 / (1 - rho + p rho))
    """
    mu_d = as_vector(mu_d, "mu_d")
    p = mu_d.size
    lo = -1.0 / (p - 1) if p > 1 else -np.inf
    if not lo < rho < 1.0:
        raise InvalidRho(f"equicorrelation rho must lie in ({lo:.6g}, 1), got {rho}")
    norm_sq = float(mu_d @ mu_d)
    total = float(mu_d.sum())
    return (norm_sq - rho * total * total / (1.0 - rho + p * rho)) / (1.0 - rho)


# Ten signal coordinates out of 1000 express a mean difference; the rest
# of the spectrum is pure correlation structure.
FIGURE1_SIGNAL = np.array([1.0] * 5 + [2.0] * 5)
FIGURE1_DIM = 1000


def figure1_table(rho_grid) -> np.ndarray:
    """Theoretical error curves for the 1000-dimensional showcase model.

    For each rho in the grid, returns a row
    (rho, fisher, naive_bayes, sub10, sub20) where sub10 restricts the
    rule to the ten signal features and sub20 additionally includes ten
    correlated no-signal features.  All four columns use exact
    equicorrelation closed forms.
    """
    grid = as_vector(rho_grid, "rho_grid")
    if np.any(grid < 0.0) or np.any(grid >= 1.0):
        raise InvalidRho("figure grid correlations must lie in [0, 1)")
    p = FIGURE1_DIM
    mu_d = np.zeros(p)
    mu_d[: FIGURE1_SIGNAL.size] = FIGURE1_SIGNAL
    mu_sub10 = mu_d[:10]
    mu_sub20 = mu_d[:20]
    norm_sq = float(mu_d @ mu_d)
    quad_base = norm_sq  # mu' Sigma mu at rho = 0
    total_sq = float(mu_d.sum()) ** 2

    rows = np.empty((grid.size, 5))
    for i, rho in enumerate(grid):
        delta_full = equicorr_delta(mu_d, rho)
        gamma = norm_sq**2 / ((1.0 - rho) * quad_base + rho * total_sq)
        rows[i] = (
            rho,
            1.0 - gaussian_cdf(np.sqrt(delta_full)),
            1.0 - gaussian_cdf(np.sqrt(gamma)),
            1.0 - gaussian_cdf(np.sqrt(equicorr_delta(mu_sub10, rho))),
            1.0 - gaussian_cdf(np.sqrt(equicorr_delta(mu_sub20, rho))),
        )
    return rows
