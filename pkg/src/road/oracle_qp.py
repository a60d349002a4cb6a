"""Exact small-dimension reference solvers by sign-pattern enumeration.

For p up to 12, every candidate sign pattern in {-1, 0, +1}^p yields a
small linear KKT system; collecting the candidates that satisfy all
optimality conditions and keeping the best gives the exact optimum of

    min w' Sigma w   s.t.  w' mu_d = 1,  ||w||_1 <= c

as well as of two related problems used as cross-checks: the penalized
equality-constrained form (equality constraint kept, l1 as a penalty)
and the generic l1-penalized quadratic that the coordinate-descent
solver minimizes.  Exponential but exact; the intended use is validating
the iterative solver, not production fitting.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .ccd import CcdConfig, CcdProblem
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    Infeasible,
    NotPositiveDefinite,
    ZeroMeanDifference,
)
from .numerics import as_sym_matrix, as_vector, sym_solve

__all__ = [
    "ExactSolution",
    "ExactPath",
    "CrosscheckReport",
    "feasibility_floor",
    "exact_solve",
    "exact_path",
    "exact_solve_penalized",
    "exact_solve_l1_quadratic",
    "verify_kkt",
    "ladder_path",
    "crosscheck_ccd",
]

_MAX_DIM = 12
_SOLVE_TOL = 1e-9


@dataclass(frozen=True)
class ExactSolution:
    """Optimum of the constrained problem at one capacity value c.

    ``multipliers`` holds (equality, l1) dual values; ``active_l1`` says
    whether the l1 constraint binds (||w||_1 = c).
    """

    w: np.ndarray
    active_l1: bool
    objective: float
    sign_pattern: np.ndarray
    multipliers: tuple


@dataclass(frozen=True)
class ExactPath:
    """Solutions along an ascending capacity grid with breakpoint notes.

    ``breakpoints`` lists indices i where the sign pattern changes
    between grid points i and i+1.
    """

    c_grid: np.ndarray
    solutions: list
    breakpoints: list


@dataclass(frozen=True)
class CrosscheckReport:
    """Objective agreement between the iterative solver and the oracle."""

    lambdas: np.ndarray
    capacities: np.ndarray
    rel_gaps: np.ndarray
    max_rel_gap: float
    skipped: int


def feasibility_floor(mu_d) -> float:
    """Smallest capacity c admitting any feasible point: 1 / ||mu_d||_inf."""
    mu_d = as_vector(mu_d, "mu_d")
    peak = float(np.abs(mu_d).max())
    if peak == 0.0:
        raise ZeroMeanDifference("mean difference is identically zero")
    return 1.0 / peak


def _check_positive_definite(sigma: np.ndarray):
    try:
        cho_factor(sigma, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("sigma must be positive definite") from exc


def _solve_checked(mat: np.ndarray, rhs: np.ndarray):
    """Solve a small dense system; None when singular or inconsistent.

    The residual tolerance is relative to the data only, never to the
    solution: a numerically singular system yields a huge garbage
    solution whose residual must not be excused by its own magnitude.
    """
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    scale = 1.0 + float(np.abs(rhs).max())
    if float(np.abs(sol).max()) > 1e12 * scale:
        return None
    residual = float(np.abs(mat @ sol - rhs).max())
    if residual > 1e-8 * scale * (1.0 + float(np.abs(mat).max())):
        return None
    return sol


def _floor_vertex(sigma, mu_d, floor):
    """Unique feasible point at the capacity floor, with valid multipliers.

    At c = 1/||mu_d||_inf the feasible set shrinks to the single vertex
    w = e_i / mu_{d,i} for i = argmax |mu_d| (generic case: unique
    argmax).  The binding-branch KKT system is singular there, so the
    multipliers are constructed directly: any large enough equality
    multiplier certifies optimality because |mu_{d,j}| < |mu_{d,i}| for
    all other coordinates.  Returns None when the argmax ties (the vertex
    is then not unique and enumeration must decide).
    """
    abs_mu = np.abs(mu_d)
    i = int(np.argmax(abs_mu))
    peak = abs_mu[i]
    others = np.delete(abs_mu, i)
    if others.size and others.max() >= peak * (1.0 - 1e-12):
        return None
    p = mu_d.size
    w = np.zeros(p)
    w[i] = 1.0 / mu_d[i]
    s_i = np.sign(mu_d[i])
    # stationarity on i: 2 sigma_ii w_i - nu mu_i + eta s_i = 0 with
    # eta = t |mu_i| - 2 sigma_ii |w_i| for nu = t s_i; pick t so that
    # every zero coordinate satisfies |2 Sigma_ji w_i - nu mu_j| <= eta.
    gaps = peak - others
    t_needed = [2.0 * abs(sigma[i, i]) * abs(w[i]) / peak]
    for j_off, j in enumerate([k for k in range(p) if k != i]):
        t_needed.append(
            (2.0 * abs(sigma[j, i] * w[i]) + 2.0 * abs(sigma[i, i] * w[i])) / gaps[j_off]
        )
    t = 2.0 * max(t_needed) + 1.0
    nu = t * s_i
    eta = t * peak - 2.0 * sigma[i, i] * abs(w[i])
    pattern = np.zeros(p, dtype=int)
    pattern[i] = int(s_i)
    return ExactSolution(
        w=w,
        active_l1=True,
        objective=float(w @ sigma @ w),
        sign_pattern=pattern,
        multipliers=(float(nu), float(eta)),
    )


def _pattern_candidates(sigma, mu_d, c, pattern):
    """KKT candidates for one sign pattern: non-binding and binding branches.

    Yields (w, nu, eta, binding) tuples that satisfy stationarity on the
    support; sign consistency and zero-block dual feasibility are checked
    by the caller.
    """
    idx = np.flatnonzero(pattern)
    s = pattern[idx].astype(float)
    sig_aa = 2.0 * sigma[np.ix_(idx, idx)]
    mu_a = mu_d[idx]
    k = idx.size

    # eta = 0: the l1 constraint is slack, stationarity has no sign term.
    mat = np.zeros((k + 1, k + 1))
    mat[:k, :k] = sig_aa
    mat[:k, k] = -mu_a
    mat[k, :k] = mu_a
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = _solve_checked(mat, rhs)
    if sol is not None:
        yield idx, sol[:k], float(sol[k]), 0.0, False

    # eta free: the l1 constraint binds, s' w = c joins the system.
    mat = np.zeros((k + 2, k + 2))
    mat[:k, :k] = sig_aa
    mat[:k, k] = -mu_a
    mat[:k, k + 1] = s
    mat[k, :k] = mu_a
    mat[k + 1, :k] = s
    rhs = np.zeros(k + 2)
    rhs[k] = 1.0
    rhs[k + 1] = c
    sol = _solve_checked(mat, rhs)
    if sol is not None:
        yield idx, sol[:k], float(sol[k]), float(sol[k + 1]), True


def exact_solve(sigma, mu_d, c: float, tol: float = _SOLVE_TOL) -> ExactSolution:
    """Exact optimum by enumerating all 3^p sign patterns.

    Requires positive definite sigma (unique optimum) and p <= 12; the
    worst case visits about 531k patterns.  Ties in the objective keep
    the pattern encountered first in lexicographic order.
    """
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    p = mu_d.size
    if sigma.shape[0] != p:
        raise DimensionMismatch("sigma and mu_d dimensions differ")
    if p > _MAX_DIM:
        raise DimensionTooLarge(f"exact enumeration capped at p={_MAX_DIM}, got {p}")
    _check_positive_definite(sigma)
    floor = feasibility_floor(mu_d)
    scale = 1.0 + abs(c)
    if c < floor - tol * scale:
        raise Infeasible(f"capacity {c} is below the feasibility floor {floor}")
    if c <= floor + tol * scale:
        vertex = _floor_vertex(sigma, mu_d, floor)
        if vertex is not None:
            return vertex

    # If the equality-constrained optimum (the normalized inverse-sigma
    # direction) already fits inside the l1 ball, no enumeration is
    # needed: extra constraints could only raise the objective.
    fisher_raw = sym_solve(sigma, mu_d)
    delta = float(fisher_raw @ mu_d)
    w_fisher = fisher_raw / delta
    if float(np.abs(w_fisher).sum()) <= c + tol * scale:
        return ExactSolution(
            w=w_fisher,
            active_l1=False,
            objective=float(w_fisher @ sigma @ w_fisher),
            sign_pattern=np.sign(w_fisher).astype(int),
            multipliers=(2.0 / delta, 0.0),
        )

    best = None
    for raw in itertools.product((-1, 0, 1), repeat=p):
        pattern = np.array(raw, dtype=int)
        if not pattern.any():
            continue
        for idx, w_a, nu, eta, binding in _pattern_candidates(sigma, mu_d, c, pattern):
            s = pattern[idx]
            if np.any(s * w_a < -tol * scale):
                continue
            if eta < -tol * scale:
                continue
            eta = max(eta, 0.0)
            l1 = float(np.abs(w_a).sum())
            if l1 > c + tol * scale:
                continue
            w = np.zeros(p)
            w[idx] = w_a
            # primal equality re-verified on the candidate itself
            if abs(float(w @ mu_d) - 1.0) > 1e-8:
                continue
            if binding and abs(l1 - c) > 1e-7 * scale:
                continue
            # zero-block dual feasibility: |2 Sigma_j. w - nu mu_j| <= eta
            grad_zero = 2.0 * (sigma @ w) - nu * mu_d
            zero_idx = pattern == 0
            if np.any(np.abs(grad_zero[zero_idx]) > eta + 1e-7 * (1.0 + abs(nu))):
                continue
            objective = float(w @ sigma @ w)
            if best is None or objective < best.objective * (1.0 - 1e-13) - 1e-15:
                best = ExactSolution(
                    w=w,
                    active_l1=binding and eta > 0.0,
                    objective=objective,
                    sign_pattern=pattern,
                    multipliers=(nu, eta),
                )
    if best is None:
        raise Infeasible(f"no KKT point found at capacity {c}")
    return best


def verify_kkt(sol: ExactSolution, sigma, mu_d, c: float, tol: float = 1e-8) -> float:
    """Independent optimality check; returns the worst violation.

    Recomputes primal feasibility, stationarity, dual feasibility and
    complementary slackness directly from (w, nu, eta), without reusing
    any enumeration internals.
    """
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    w = sol.w
    nu, eta = sol.multipliers
    violations = [
        abs(float(w @ mu_d) - 1.0),
        max(float(np.abs(w).sum()) - c, 0.0),
        max(-eta, 0.0),
        eta * abs(float(np.abs(w).sum()) - c),
    ]
    grad = 2.0 * sigma @ w - nu * mu_d
    nz = w != 0.0
    if np.any(nz):
        violations.append(float(np.abs(grad[nz] + eta * np.sign(w[nz])).max()))
    if np.any(~nz):
        violations.append(max(float(np.abs(grad[~nz]).max()) - eta, 0.0))
    return max(violations)


def exact_path(sigma, mu_d, c_grid, tol: float = _SOLVE_TOL) -> ExactPath:
    """Exact solutions along an ascending capacity grid.

    Consecutive grid points whose sign patterns differ are recorded as
    breakpoint intervals.
    """
    grid = as_vector(c_grid, "c_grid")
    if np.any(np.diff(grid) <= 0.0):
        raise DimensionMismatch("capacity grid must be strictly increasing")
    solutions = [exact_solve(sigma, mu_d, float(c), tol=tol) for c in grid]
    breakpoints = [
        i
        for i in range(len(solutions) - 1)
        if not np.array_equal(solutions[i].sign_pattern, solutions[i + 1].sign_pattern)
    ]
    return ExactPath(c_grid=grid, solutions=solutions, breakpoints=breakpoints)


def exact_solve_penalized(sigma, mu_d, lam: float, tol: float = _SOLVE_TOL):
    """Exact optimum of min w' Sigma w + lam ||w||_1 s.t. w' mu_d = 1.

    Same enumeration idea with the l1 multiplier fixed at lam.  Returns
    (w, nu, objective).
    """
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    p = mu_d.size
    if p > _MAX_DIM:
        raise DimensionTooLarge(f"exact enumeration capped at p={_MAX_DIM}, got {p}")
    _check_positive_definite(sigma)

    best = None
    for raw in itertools.product((-1, 0, 1), repeat=p):
        pattern = np.array(raw, dtype=int)
        if not pattern.any():
            continue
        idx = np.flatnonzero(pattern)
        s = pattern[idx].astype(float)
        k = idx.size
        mat = np.zeros((k + 1, k + 1))
        mat[:k, :k] = 2.0 * sigma[np.ix_(idx, idx)]
        mat[:k, k] = -mu_d[idx]
        mat[k, :k] = mu_d[idx]
        rhs = np.zeros(k + 1)
        rhs[:k] = -lam * s
        rhs[k] = 1.0
        sol = _solve_checked(mat, rhs)
        if sol is None:
            continue
        w_a, nu = sol[:k], float(sol[k])
        if np.any(s * w_a < -tol):
            continue
        w = np.zeros(p)
        w[idx] = w_a
        if abs(float(w @ mu_d) - 1.0) > 1e-8:
            continue
        grad_zero = 2.0 * (sigma @ w) - nu * mu_d
        if np.any(np.abs(grad_zero[pattern == 0]) > lam + 1e-7 * (1.0 + abs(nu))):
            continue
        objective = float(w @ sigma @ w) + lam * float(np.abs(w).sum())
        if best is None or objective < best[2] * (1.0 - 1e-13) - 1e-15:
            best = (w, nu, objective)
    if best is None:
        raise Infeasible(f"no KKT point found for penalty {lam}")
    return best


def exact_solve_l1_quadratic(h, b, lam: float, tol: float = _SOLVE_TOL):
    """Exact optimum of min 1/2 w' H w - b' w + lam ||w||_1, H PD.

    This is the unconstrained problem the coordinate-descent solver
    minimizes once its quadratic is folded into H.  Returns
    (w, objective).
    """
    h = as_sym_matrix(h, "H")
    b = as_vector(b, "b")
    p = b.size
    if p > _MAX_DIM:
        raise DimensionTooLarge(f"exact enumeration capped at p={_MAX_DIM}, got {p}")

    best = None
    for raw in itertools.product((-1, 0, 1), repeat=p):
        pattern = np.array(raw, dtype=int)
        idx = np.flatnonzero(pattern)
        if idx.size == 0:
            if np.all(np.abs(b) <= lam + tol):
                w = np.zeros(p)
                best_candidate = (w, 0.0)
                if best is None or best_candidate[1] < best[1]:
                    best = best_candidate
            continue
        s = pattern[idx].astype(float)
        sol = _solve_checked(h[np.ix_(idx, idx)], b[idx] - lam * s)
        if sol is None:
            continue
        if np.any(s * sol < -tol):
            continue
        w = np.zeros(p)
        w[idx] = sol
        grad_zero = b - h @ w
        if np.any(np.abs(grad_zero[pattern == 0]) > lam + tol):
            continue
        objective = 0.5 * float(w @ h @ w) - float(b @ w) + lam * float(np.abs(w).sum())
        if best is None or objective < best[1] - 1e-15:
            best = (w, objective)
    if best is None:
        raise Infeasible(f"no stationary point found for penalty {lam}")
    return best


def ladder_path(sigma, mu_d, lambdas, gamma_large: float = 1e6,
                tol: float = 1e-11, max_cycles: int = 5000):
    """CCD path at a large affine penalty via gamma continuation.

    Coordinate descent moves only O(1/gamma) per sweep in directions
    tangent to the affine constraint, so a stiff gamma is unusable from
    a cold or neighboring-lambda start.  Instead the whole lambda path
    is solved on an ascending gamma ladder (factors of 10 from 10 up to
    ``gamma_large``), warm-starting every lambda point from the same
    point of the previous rung; the final rung then only needs to polish
    the well-conditioned normal direction.  Returns the final rung's
    path points, in the order of the given lambdas.
    """
    grid = as_vector(lambdas, "lambdas")
    order = np.argsort(grid)[::-1]
    descending = grid[order]
    ladder = [10.0]
    while ladder[-1] < gamma_large:
        ladder.append(min(ladder[-1] * 10.0, gamma_large))
    warms = [None] * descending.size
    points = [None] * descending.size
    for gamma in ladder:
        config = CcdConfig(gamma=gamma, tol=tol, max_cycles=max_cycles)
        problem = CcdProblem(sigma, mu_d, config)
        prev = None
        for k, lam in enumerate(descending):
            start = warms[k] if warms[k] is not None else prev
            point = problem.solve_at(float(lam), warm=start)
            warms[k] = point.w
            points[k] = point
            prev = point.w
    undo = np.empty_like(order)
    undo[order] = np.arange(order.size)
    return [points[i] for i in undo]


def crosscheck_ccd(sigma, mu_d, lambda_grid, gamma_large: float = 1e6) -> CrosscheckReport:
    """Compare rescaled CCD solutions against the exact capacity oracle.

    Each CCD solution w is rescaled to satisfy the affine constraint
    exactly, its l1 norm c' is read off, and its quadratic form is
    compared with the exact optimum at capacity c'.  Points with empty
    support (or a vanishing affine margin) have no capacity counterpart
    and are skipped.
    """
    sigma = as_sym_matrix(sigma, "sigma")
    mu_d = as_vector(mu_d, "mu_d")
    grid = np.sort(as_vector(lambda_grid, "lambda_grid"))[::-1]
    lams, caps, gaps = [], [], []
    skipped = 0
    for lam, point in zip(grid, ladder_path(sigma, mu_d, grid, gamma_large)):
        margin = float(point.w @ mu_d)
        if point.support_size == 0 or abs(margin) < 1e-8:
            skipped += 1
            continue
        w_hat = point.w / margin
        cap = float(np.abs(w_hat).sum())
        exact = exact_solve(sigma, mu_d, cap)
        ccd_obj = float(w_hat @ sigma @ w_hat)
        gaps.append(ccd_obj / exact.objective - 1.0)
        lams.append(float(lam))
        caps.append(cap)
    gaps = np.array(gaps)
    return CrosscheckReport(
        lambdas=np.array(lams),
        capacities=np.array(caps),
        rel_gaps=gaps,
        max_rel_gap=float(np.abs(gaps).max()) if gaps.size else 0.0,
        skipped=skipped,
    )
