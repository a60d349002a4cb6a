"""Dense numeric primitives shared by every module.

Symmetric positive-definite solves, the standard Gaussian CDF, order
statistic quantiles, soft-thresholding, and a seeded RNG contract that
produces identical streams across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

from .errors import DimensionMismatch, EmptyInput, NotPositiveDefinite

__all__ = [
    "soft_threshold",
    "gaussian_cdf",
    "sym_solve",
    "empirical_quantile",
    "RngStream",
    "as_vector",
    "as_sym_matrix",
]


def soft_threshold(z, lam):
    """Soft-thresholding operator sign(z) * max(|z| - lam, 0).

    Works elementwise on arrays.  ``lam`` must be nonnegative; the
    function is total on finite inputs.
    """
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def gaussian_cdf(x):
    """Standard normal CDF.

    Backed by scipy's ``ndtr`` (erfc-based), whose absolute error is at
    machine precision, far below the 1e-12 contract.  Accepts scalars or
    arrays.
    """
    return ndtr(x)


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-d float array, raising on bad input."""
    arr = np.ascontiguousarray(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return arr


def as_sym_matrix(a, name: str = "matrix", rtol: float = 1e-12) -> np.ndarray:
    """Coerce to a finite symmetric square float array.

    Symmetry is required to within ``rtol`` relative to the largest
    entry; the returned matrix is exactly symmetrized.
    """
    arr = np.ascontiguousarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.abs(arr).max()))
    asym = float(np.abs(arr - arr.T).max())
    if asym > rtol * scale:
        raise DimensionMismatch(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return (arr + arr.T) / 2.0


def sym_solve(a, b) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A via Cholesky.

    Positive definiteness is decided by the factorization itself: a
    non-positive pivot raises ``NotPositiveDefinite``.
    """
    a = as_sym_matrix(a, "A")
    b = as_vector(b, "b")
    if a.shape[0] != b.size:
        raise DimensionMismatch(f"A is {a.shape[0]}x{a.shape[0]} but b has length {b.size}")
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from exc
    return cho_solve(factor, b, check_finite=False)


def empirical_quantile(values, q: float) -> float:
    """Lower order-statistic quantile.

    Returns the ceil(q * n)-th smallest value (1-indexed), so q = 0 gives
    the minimum and q = 1 the maximum.  This is the plain order-statistic
    rule with no interpolation.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInput("cannot take a quantile of an empty vector")
    if not 0.0 <= q <= 1.0:
        raise DimensionMismatch(f"quantile level must be in [0, 1], got {q}")
    k = int(np.ceil(q * arr.size))
    k = min(max(k, 1), arr.size)
    return float(np.partition(arr, k - 1)[k - 1])


_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 round; a fixed 64-bit mixing function."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream keyed by a 64-bit (seed, stream) pair.

    Equal keys produce bit-identical sequences across runs and platforms
    (numpy fixes the PCG64 stream for a given SeedSequence).  Concurrent
    tasks must own distinct stream ids; ``substream`` derives them
    deterministically via splitmix64 mixing.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(
            entropy=self.seed & _MASK64, spawn_key=(self.stream & _MASK64,)
        )
        return np.random.default_rng(ss)

    def substream(self, key: int) -> "RngStream":
        """Derive a child stream; distinct keys give distinct streams."""
        mixed = _splitmix64((self.stream * 0x9E3779B97F4A7C15 + key + 1) & _MASK64)
        return RngStream(self.seed, mixed)
