"""Constrained coordinate descent for the penalized discriminant objective.

The solver minimizes

    f(w) = 1/2 w' Sigma w + lam ||w||_1 + gamma/2 (w' mu_d - 1)^2

by cyclic exact coordinate minimization over a descending log-spaced
grid of lam values, warm-starting each grid point from the previous one.
Internally the smooth part is a single quadratic with matrix
H = Sigma + gamma mu_d mu_d' and linear term gamma mu_d, so one
coordinate update is a soft-threshold plus a rank-one refresh of the
running product H w.

Each solve alternates full cyclic sweeps over all coordinates with
cheaper sweeps restricted to the current nonzero set, the usual
pathwise-solver organization; convergence is declared when a full sweep
moves no coordinate by more than tol * (1 + ||w||_inf), and
``cycles_used`` counts full sweeps.  Zero means exact zero: coordinates
leave the model only through the soft threshold and support sizes count
exact nonzeros.

The sweep kernel is JIT-compiled when numba is importable; a pure-Python
twin with identical operation order is used otherwise, so results are
bit-identical either way.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroMeanDifference
from .numerics import as_sym_matrix, as_vector

__all__ = [
    "CcdConfig",
    "PathPoint",
    "SolutionPath",
    "CcdDiagnostics",
    "CcdProblem",
    "lambda_max",
    "coordinate_update",
    "solve_at",
    "solve_path",
    "kkt_max_violation",
]


@dataclass(frozen=True)
class CcdConfig:
    """Solver settings: affine-penalty weight, grid shape and stopping rule.

    The grid runs from lambda_max down to tau * lambda_max in grid_size
    log-spaced steps.  A solve stops once the largest coordinate change
    in a full sweep drops below tol * (1 + ||w||_inf); max_cycles bounds
    the number of full sweeps (active-set sweeps in between get a 10x
    total budget so a degenerate instance cannot spin forever).
    """

    gamma: float = 10.0
    tau: float = 1e-3
    grid_size: int = 100
    tol: float = 1e-7
    max_cycles: int = 1000

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise DimensionMismatch(f"gamma must be positive, got {self.gamma}")
        if not 0.0 < self.tau < 1.0:
            raise DimensionMismatch(f"tau must lie in (0, 1), got {self.tau}")
        if self.grid_size < 2:
            raise DimensionMismatch(f"grid size must be at least 2, got {self.grid_size}")
        if self.tol <= 0.0 or self.max_cycles < 1:
            raise DimensionMismatch("tol must be positive and max_cycles at least 1")


@dataclass(frozen=True)
class PathPoint:
    """Solution at one penalty value; support counts exact nonzeros."""

    lam: float
    w: np.ndarray
    support_size: int
    objective: float
    cycles_used: int
    converged: bool = True


@dataclass(frozen=True)
class SolutionPath:
    """Ordered solutions for a strictly decreasing penalty grid."""

    points: list
    config: CcdConfig
    fingerprint: str

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([pt.lam for pt in self.points])

    @property
    def support_sizes(self) -> np.ndarray:
        return np.array([pt.support_size for pt in self.points])

    @property
    def weights(self) -> np.ndarray:
        """p x K matrix of solutions, one column per grid point."""
        return np.column_stack([pt.w for pt in self.points])


@dataclass
class CcdDiagnostics:
    """Aggregate per-update descent accounting.

    Every exact coordinate minimization must not increase the objective;
    ``max_violation`` records the worst positive change of the local 1-d
    objective, normalized by its magnitude.  ``cycles`` collects the full
    sweeps used by each solve.
    """

    updates: int = 0
    descent_violations: int = 0
    max_violation: float = 0.0
    violation_tol: float = 1e-12
    cycles: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Solve kernels.  One call runs a complete solve: full cyclic sweeps
# alternate with sweeps restricted to the current nonzeros until a full
# sweep's largest coordinate change drops below tol * (1 + ||w||_inf).
# The python versions are the reference; the numba versions compile the
# same statements, so results are bit-identical.  ``stats`` (diagnostic
# variant) accumulates [updates, descent violations, max violation];
# the 1-d objective at coordinate j is g(v) = hd/2 v^2 - z v + lam |v|
# and an exact minimization may never increase it.
# ---------------------------------------------------------------------------


def _solve_kernel_py(h, hd, b, curved, w, hw, lam, tol, max_full, max_total):
    p = w.shape[0]
    full_cycles = 0
    total = 0
    converged = False
    while full_cycles < max_full and total < max_total:
        full_cycles += 1
        total += 1
        wmax = 0.0
        for j in range(p):
            a = abs(w[j])
            if a > wmax:
                wmax = a
        thresh = tol * (1.0 + wmax)
        biggest = 0.0
        for j in range(p):
            if not curved[j]:
                continue
            wj = w[j]
            z = b[j] - hw[j] + hd[j] * wj
            if z > lam:
                new = (z - lam) / hd[j]
            elif z < -lam:
                new = (z + lam) / hd[j]
            else:
                new = 0.0
            d = new - wj
            if d != 0.0:
                w[j] = new
                for k in range(p):
                    hw[k] += d * h[j, k]
                ad = abs(d)
                if ad > biggest:
                    biggest = ad
        if biggest <= thresh:
            converged = True
            break
        while total < max_total:
            total += 1
            wmax = 0.0
            for j in range(p):
                a = abs(w[j])
                if a > wmax:
                    wmax = a
            thresh = tol * (1.0 + wmax)
            biggest = 0.0
            for j in range(p):
                if not curved[j]:
                    continue
                wj = w[j]
                if wj == 0.0:
                    continue
                z = b[j] - hw[j] + hd[j] * wj
                if z > lam:
                    new = (z - lam) / hd[j]
                elif z < -lam:
                    new = (z + lam) / hd[j]
                else:
                    new = 0.0
                d = new - wj
                if d != 0.0:
                    w[j] = new
                    for k in range(p):
                        hw[k] += d * h[j, k]
                    ad = abs(d)
                    if ad > biggest:
                        biggest = ad
            if biggest <= thresh:
                break
    return full_cycles, converged


def _solve_kernel_diag_py(h, hd, b, curved, w, hw, lam, tol, max_full, max_total,
                          stats, vtol):
    p = w.shape[0]
    full_cycles = 0
    total = 0
    converged = False
    while full_cycles < max_full and total < max_total:
        full_cycles += 1
        total += 1
        wmax = 0.0
        for j in range(p):
            a = abs(w[j])
            if a > wmax:
                wmax = a
        thresh = tol * (1.0 + wmax)
        biggest = 0.0
        for j in range(p):
            if not curved[j]:
                continue
            wj = w[j]
            z = b[j] - hw[j] + hd[j] * wj
            if z > lam:
                new = (z - lam) / hd[j]
            elif z < -lam:
                new = (z + lam) / hd[j]
            else:
                new = 0.0
            g_old = 0.5 * hd[j] * wj * wj - z * wj + lam * abs(wj)
            g_new = 0.5 * hd[j] * new * new - z * new + lam * abs(new)
            delta = (g_new - g_old) / (1.0 + abs(g_old) + abs(g_new))
            stats[0] += 1.0
            if delta > vtol:
                stats[1] += 1.0
            if delta > stats[2]:
                stats[2] = delta
            d = new - wj
            if d != 0.0:
                w[j] = new
                for k in range(p):
                    hw[k] += d * h[j, k]
                ad = abs(d)
                if ad > biggest:
                    biggest = ad
        if biggest <= thresh:
            converged = True
            break
        while total < max_total:
            total += 1
            wmax = 0.0
            for j in range(p):
                a = abs(w[j])
                if a > wmax:
                    wmax = a
            thresh = tol * (1.0 + wmax)
            biggest = 0.0
            for j in range(p):
                if not curved[j]:
                    continue
                wj = w[j]
                if wj == 0.0:
                    continue
                z = b[j] - hw[j] + hd[j] * wj
                if z > lam:
                    new = (z - lam) / hd[j]
                elif z < -lam:
                    new = (z + lam) / hd[j]
                else:
                    new = 0.0
                g_old = 0.5 * hd[j] * wj * wj - z * wj + lam * abs(wj)
                g_new = 0.5 * hd[j] * new * new - z * new + lam * abs(new)
                delta = (g_new - g_old) / (1.0 + abs(g_old) + abs(g_new))
                stats[0] += 1.0
                if delta > vtol:
                    stats[1] += 1.0
                if delta > stats[2]:
                    stats[2] = delta
                d = new - wj
                if d != 0.0:
                    w[j] = new
                    for k in range(p):
                        hw[k] += d * h[j, k]
                    ad = abs(d)
                    if ad > biggest:
                        biggest = ad
            if biggest <= thresh:
                break
    return full_cycles, converged


try:  # pragma: no cover - exercised indirectly
    from numba import njit

    _solve_kernel = njit(cache=True)(_solve_kernel_py)
    _solve_kernel_diag = njit(cache=True)(_solve_kernel_diag_py)
except ImportError:  # pragma: no cover
    _solve_kernel = _solve_kernel_py
    _solve_kernel_diag = _solve_kernel_diag_py


def lambda_max(sigma, mu_d, gamma: float) -> float:
    """Smallest penalty at which the all-zero vector is optimal.

    At w = 0 the smooth gradient is -gamma mu_d, so zero satisfies the
    subgradient condition exactly when lam >= gamma * ||mu_d||_inf.
    """
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    if sigma.shape[0] != mu_d.size:
        raise DimensionMismatch("sigma and mu_d dimensions differ")
    peak = float(np.abs(mu_d).max())
    if peak == 0.0:
        raise ZeroMeanDifference("mean difference is identically zero")
    return gamma * peak


def coordinate_update(j: int, w, sigma, mu_d, lam: float, gamma: float) -> float:
    """Exact minimizer of the objective in coordinate j, others fixed.

    Returns S(gamma mu_j - (Sigma_{j,-j} + gamma mu_j mu_{-j}') w_{-j}, lam)
    divided by Sigma_jj + gamma mu_j^2.
    """
    w = np.asarray(w, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mu_d = np.asarray(mu_d, dtype=float)
    cross = float(sigma[j] @ w) - sigma[j, j] * w[j]
    cross += gamma * mu_d[j] * (float(mu_d @ w) - mu_d[j] * w[j])
    z = gamma * mu_d[j] - cross
    denom = sigma[j, j] + gamma * mu_d[j] ** 2
    if abs(z) <= lam:
        return 0.0
    return (z - lam if z > 0 else z + lam) / denom


class CcdProblem:
    """One (sigma, mu_d, config) instance with shared precomputation.

    Builds H = sigma + gamma mu_d mu_d' once so that solves at many
    penalty values reuse it.  Coordinates with zero curvature
    (sigma_jj = 0 and mu_dj = 0) are held at zero permanently.
    """

    def __init__(self, sigma, mu_d, config: CcdConfig | None = None):
        self.config = config if config is not None else CcdConfig()
        self.sigma = as_sym_matrix(sigma, "sigma")
        self.mu_d = as_vector(mu_d, "mu_d")
        if self.sigma.shape[0] != self.mu_d.size:
            raise DimensionMismatch("sigma and mu_d dimensions differ")
        gamma = self.config.gamma
        self._h = np.ascontiguousarray(self.sigma + gamma * np.outer(self.mu_d, self.mu_d))
        self._hdiag = np.ascontiguousarray(np.diag(self._h))
        self._b = np.ascontiguousarray(gamma * self.mu_d)
        self._curved = np.ascontiguousarray(self._hdiag > 0.0)

    @property
    def p(self) -> int:
        return self.mu_d.size

    def lambda_max(self) -> float:
        return lambda_max(self.sigma, self.mu_d, self.config.gamma)

    def lambda_grid(self) -> np.ndarray:
        top = self.lambda_max()
        return np.geomspace(top, self.config.tau * top, self.config.grid_size)

    def fingerprint(self) -> str:
        """Short content hash of the problem inputs, for provenance."""
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.sigma).tobytes())
        digest.update(np.ascontiguousarray(self.mu_d).tobytes())
        digest.update(repr(self.config).encode())
        return digest.hexdigest()[:16]

    def objective(self, w, lam: float) -> float:
        w = np.asarray(w, dtype=float)
        quad = 0.5 * float(w @ self._h @ w)
        return quad - float(self._b @ w) + 0.5 * self.config.gamma + lam * float(
            np.abs(w).sum()
        )

    def solve_at(self, lam: float, warm=None, diagnostics: CcdDiagnostics | None = None) -> PathPoint:
        """Coordinate descent from a warm start at one penalty value.

        Full cyclic sweeps alternate with sweeps over the current
        nonzeros until a full sweep moves nothing by more than
        tol * (1 + ||w||_inf).  Exhausting max_cycles returns the best
        iterate with ``converged=False`` instead of raising.
        """
        if lam < 0.0:
            raise DimensionMismatch(f"penalty must be nonnegative, got {lam}")
        if warm is None:
            w = np.zeros(self.p)
        else:
            w = np.array(warm, dtype=float, copy=True)
            if w.size != self.p:
                raise DimensionMismatch("warm start has wrong length")
            w[~self._curved] = 0.0
        hw = self._h @ w

        tol = self.config.tol
        max_full = self.config.max_cycles
        max_total = 10 * max_full
        if diagnostics is None:
            full_cycles, converged = _solve_kernel(
                self._h, self._hdiag, self._b, self._curved, w, hw,
                float(lam), tol, max_full, max_total,
            )
        else:
            stats = np.zeros(3)
            stats[2] = diagnostics.max_violation
            full_cycles, converged = _solve_kernel_diag(
                self._h, self._hdiag, self._b, self._curved, w, hw,
                float(lam), tol, max_full, max_total,
                stats, diagnostics.violation_tol,
            )
            diagnostics.updates += int(stats[0])
            diagnostics.descent_violations += int(stats[1])
            diagnostics.max_violation = float(stats[2])
            diagnostics.cycles.append(full_cycles)
        return PathPoint(
            lam=float(lam),
            w=w,
            support_size=int(np.count_nonzero(w)),
            objective=self.objective(w, lam),
            cycles_used=full_cycles,
            converged=converged,
        )

    def solve_path(self, lambdas=None, diagnostics: CcdDiagnostics | None = None) -> SolutionPath:
        """Warm-started solutions over the descending penalty grid."""
        if lambdas is None:
            grid = self.lambda_grid()
        else:
            grid = as_vector(lambdas, "lambdas")
            if np.any(np.diff(grid) >= 0.0):
                raise DimensionMismatch("penalty grid must be strictly decreasing")
        points = []
        warm = np.zeros(self.p)
        for lam in grid:
            point = self.solve_at(float(lam), warm=warm, diagnostics=diagnostics)
            points.append(point)
            warm = point.w
        return SolutionPath(points=points, config=self.config, fingerprint=self.fingerprint())


def solve_at(lam: float, warm, sigma, mu_d, config: CcdConfig | None = None,
             diagnostics: CcdDiagnostics | None = None) -> PathPoint:
    """One-shot solve at a single penalty value."""
    return CcdProblem(sigma, mu_d, config).solve_at(lam, warm=warm, diagnostics=diagnostics)


def solve_path(sigma, mu_d, config: CcdConfig | None = None, lambdas=None,
               diagnostics: CcdDiagnostics | None = None) -> SolutionPath:
    """Full solution path for one problem instance."""
    return CcdProblem(sigma, mu_d, config).solve_path(lambdas=lambdas, diagnostics=diagnostics)


def kkt_max_violation(w, sigma, mu_d, lam: float, gamma: float) -> float:
    """Normalized worst-case subgradient residual at w.

    The smooth gradient is g = Sigma w + gamma (w'mu_d - 1) mu_d.  Zero
    coordinates require |g_j| <= lam and nonzero ones
    g_j + lam sign(w_j) = 0.  Each coordinate's excess is divided by
    (sum_k |H_jk|) * (1 + ||w||_inf), the amount the residual can move
    when every coordinate shifts by one convergence-tolerance unit, so a
    converged solve keeps the returned value near the configured tol.
    """
    w = as_vector(w, "w")
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    h = sigma + gamma * np.outer(mu_d, mu_d)
    g = sigma @ w + gamma * (float(w @ mu_d) - 1.0) * mu_d
    row_scale = np.abs(h).sum(axis=1) * (1.0 + float(np.abs(w).max()))
    excess = np.where(w == 0.0, np.maximum(np.abs(g) - lam, 0.0), np.abs(g + lam * np.sign(w)))
    ok = row_scale > 0.0
    return float(np.max(excess[ok] / row_scale[ok])) if np.any(ok) else 0.0
