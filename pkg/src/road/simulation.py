"""Scenario generators and the Monte-Carlo experiment runner.

Covariance constructors (equicorrelation, block-diagonal, random factor
structure), signal constructors (fixed, sparse-fixed, double
exponential), Gaussian sampling, two independence baselines, and a
replication loop that aggregates median test errors and support sizes
into report tables.  Desk-scale defaults (p=500, 100 per class, 10
replications) keep a full study in minutes; full-scale settings
(p=1000, 300 per class, 100 replications) reproduce the reference
tables and run for hours.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .ccd import CcdConfig
from .classifiers import (
    LinearClassifier,
    fit_droad,
    fit_road,
    fit_sroad,
    test_error,
)
from .errors import DimensionMismatch, InvalidRho, RoadError
from .estimation import LabeledData, pooled_diag_variance, t_statistics
from .numerics import RngStream, gaussian_cdf
from .population import equicorr_delta

__all__ = [
    "Equicorrelation",
    "BlockDiagonal",
    "RandomFactor",
    "FixedSignal",
    "SparseFixed",
    "LaplaceSignal",
    "Scenario",
    "MethodSummary",
    "ExperimentReport",
    "make_covariance",
    "make_signal",
    "sample_dataset",
    "naive_bayes_fit",
    "fair_like_fit",
    "run_experiment",
    "gamma_sensitivity",
    "METHOD_NAMES",
]


# -- covariance specs ----------------------------------------------------

@dataclass(frozen=True)
class Equicorrelation:
    """Unit-diagonal matrix with constant pairwise correlation."""

    rho: float


@dataclass(frozen=True)
class BlockDiagonal:
    """Block-diagonal matrix of equicorrelated blocks, same rho."""

    sizes: tuple
    rho: float


@dataclass(frozen=True)
class RandomFactor:
    """Normalized Omega Omega' + c I with Unif(-1,1) factor entries."""

    m: int
    seed: int = 0


# -- signal specs --------------------------------------------------------

@dataclass(frozen=True)
class FixedSignal:
    """Explicit class-2 mean vector."""

    values: tuple


@dataclass(frozen=True)
class SparseFixed:
    """Constant value on the first s0 coordinates, zero elsewhere."""

    s0: int
    value: float = 1.0


@dataclass(frozen=True)
class LaplaceSignal:
    """Double-exponential draws (density rate/2 * exp(-rate |x|)) on the
    first s0 coordinates, redrawn per replication."""

    s0: int
    rate: float = 2.0


@dataclass(frozen=True)
class Scenario:
    """One simulation design: dimensions, covariance and signal recipe."""

    p: int
    n_per_class: int
    covariance: object
    signal: object
    seed: int = 0


def make_covariance(spec, p: int) -> np.ndarray:
    """Build the p x p covariance for a spec; always unit diagonal."""
    if isinstance(spec, Equicorrelation):
        lo = -1.0 / (p - 1) if p > 1 else -np.inf
        if not lo < spec.rho < 1.0:
            raise InvalidRho(f"equicorrelation rho must lie in ({lo:.6g}, 1), got {spec.rho}")
        return (1.0 - spec.rho) * np.eye(p) + spec.rho * np.ones((p, p))
    if isinstance(spec, BlockDiagonal):
        sizes = tuple(int(b) for b in spec.sizes)
        if sum(sizes) != p:
            raise DimensionMismatch(f"block sizes {sizes} do not sum to p={p}")
        out = np.zeros((p, p))
        start = 0
        for b in sizes:
            lo = -1.0 / (b - 1) if b > 1 else -np.inf
            if not lo < spec.rho < 1.0:
                raise InvalidRho(
                    f"block of size {b} needs rho in ({lo:.6g}, 1), got {spec.rho}"
                )
            out[start : start + b, start : start + b] = (
                (1.0 - spec.rho) * np.eye(b) + spec.rho * np.ones((b, b))
            )
            start += b
        return out
    if isinstance(spec, RandomFactor):
        if spec.m < 1:
            raise DimensionMismatch("factor count m must be at least 1")
        gen = RngStream(spec.seed, 0).generator()
        omega = gen.uniform(-1.0, 1.0, size=(p, spec.m))
        gram = omega @ omega.T
        xi = gram + float(np.diag(gram).min()) * np.eye(p)
        d = np.sqrt(np.diag(xi))
        return xi / np.outer(d, d)
    raise DimensionMismatch(f"unknown covariance spec {type(spec).__name__}")


def make_signal(spec, p: int, rng: RngStream) -> np.ndarray:
    """Class-2 mean vector (class 1 is centered at the origin)."""
    if isinstance(spec, FixedSignal):
        mu2 = np.asarray(spec.values, dtype=float)
        if mu2.size != p:
            raise DimensionMismatch(f"fixed signal has length {mu2.size}, expected {p}")
        return mu2.copy()
    if isinstance(spec, SparseFixed):
        if not 0 < spec.s0 <= p:
            raise DimensionMismatch(f"sparsity size {spec.s0} out of range for p={p}")
        mu2 = np.zeros(p)
        mu2[: spec.s0] = spec.value
        return mu2
    if isinstance(spec, LaplaceSignal):
        if not 0 < spec.s0 <= p:
            raise DimensionMismatch(f"sparsity size {spec.s0} out of range for p={p}")
        mu2 = np.zeros(p)
        mu2[: spec.s0] = rng.generator().laplace(0.0, 1.0 / spec.rate, size=spec.s0)
        return mu2
    raise DimensionMismatch(f"unknown signal spec {type(spec).__name__}")


def _draw_labeled(mu2: np.ndarray, chol: np.ndarray, n_per_class: int,
                  gen: np.random.Generator) -> LabeledData:
    p = mu2.size
    z = gen.standard_normal((2 * n_per_class, p))
    x = z @ chol.T
    x[n_per_class:] += mu2
    y = np.repeat([1, 2], n_per_class)
    return LabeledData(x, y)


def sample_dataset(scenario: Scenario, rng: RngStream):
    """Independent train and test sets drawn from the scenario.

    Random covariance structure is fixed by the spec seed; a random
    signal is redrawn from the given stream.
    """
    sigma = make_covariance(scenario.covariance, scenario.p)
    chol = np.linalg.cholesky(sigma)
    mu2 = make_signal(scenario.signal, scenario.p, rng.substream(0))
    gen = rng.substream(1).generator()
    train = _draw_labeled(mu2, chol, scenario.n_per_class, gen)
    test = _draw_labeled(mu2, chol, scenario.n_per_class, gen)
    return train, test


def _analytic_delta(scenario: Scenario, sigma_factor, mu2: np.ndarray) -> float:
    """Population Fisher exponent for the drawn signal.

    Equicorrelation and block structures use the rank-one closed form
    per block; the random structure solves against the prefactored
    covariance.
    """
    mu_d = mu2 / 2.0
    cov = scenario.covariance
    if isinstance(cov, Equicorrelation):
        return equicorr_delta(mu_d, cov.rho)
    if isinstance(cov, BlockDiagonal):
        total = 0.0
        start = 0
        for b in cov.sizes:
            total += equicorr_delta(mu_d[start : start + b], cov.rho) if b > 1 else (
                float(mu_d[start] ** 2)
            )
            start += b
        return total
    return float(mu_d @ cho_solve(sigma_factor, mu_d, check_finite=False))


def naive_bayes_fit(data: LabeledData) -> LinearClassifier:
    """Independence rule: w_j is the mean difference over the pooled variance.

    Uses every feature; zero-variance features are dropped (weight 0).
    """
    est_var = pooled_diag_variance(data)
    x1 = data.class_rows(1)
    x2 = data.class_rows(2)
    mu1 = x1.mean(axis=0)
    mu2 = x2.mean(axis=0)
    mu_d = (mu2 - mu1) / 2.0
    w = np.zeros(data.p)
    ok = est_var > 0.0
    w[ok] = mu_d[ok] / est_var[ok]
    return LinearClassifier(
        w=w,
        mu_a_hat=(mu1 + mu2) / 2.0,
        chosen_lambda=None,
        method="nb",
        support=np.flatnonzero(w),
    )


def _independence_weights(data: LabeledData):
    est_var = pooled_diag_variance(data)
    x1 = data.class_rows(1)
    x2 = data.class_rows(2)
    mu1 = x1.mean(axis=0)
    mu2 = x2.mean(axis=0)
    mu_d = (mu2 - mu1) / 2.0
    w = np.zeros(data.p)
    ok = est_var > 0.0
    w[ok] = mu_d[ok] / est_var[ok]
    return w, (mu1 + mu2) / 2.0


def _fair_m_grid(p: int, n: int) -> list:
    cap = min(p, n)
    grid = []
    m = 1
    while m < cap:
        grid.append(m)
        m *= 2
    grid.append(cap)
    return grid


def fair_like_fit(data: LabeledData, folds: int = 5, rng: RngStream = RngStream(0),
                  m_grid=None) -> LinearClassifier:
    """Independence rule on the m features with largest |t|, m chosen by CV.

    The candidate counts are powers of two up to min(p, n); each fold
    reranks features on its own training part.  Ties in CV error go to
    the smaller m.  A simplified stand-in for marginal-t feature
    annealing baselines, not a reproduction of any specific one.
    """
    from .classifiers import _check_cv_inputs, _stratified_folds

    _check_cv_inputs(data, folds)
    grid = list(m_grid) if m_grid is not None else _fair_m_grid(data.p, data.n)
    if any(not 1 <= m <= data.p for m in grid):
        raise DimensionMismatch("retained-count grid out of range")
    fold_errors = np.empty((folds, len(grid)))
    for f, (train_idx, val_idx) in enumerate(_stratified_folds(data.y, folds, rng)):
        dtr = data.subset_samples(train_idx)
        w_full, mu_a = _independence_weights(dtr)
        t_abs = np.abs(t_statistics(dtr))
        order = np.lexsort((np.arange(dtr.p), -t_abs))
        w_by_m = np.zeros((data.p, len(grid)))
        for col, m in enumerate(grid):
            keep = order[:m]
            w_by_m[keep, col] = w_full[keep]
        margins = (data.x[val_idx] - mu_a) @ w_by_m
        pred = np.where(margins > 0.0, 2, 1)
        fold_errors[f] = (pred != data.y[val_idx, None]).mean(axis=0)
    mean_errors = fold_errors.mean(axis=0)
    chosen = int(np.argmin(mean_errors))  # first minimum = smallest m

    w_full, mu_a = _independence_weights(data)
    t_abs = np.abs(t_statistics(data))
    order = np.lexsort((np.arange(data.p), -t_abs))
    keep = order[: grid[chosen]]
    w = np.zeros(data.p)
    w[keep] = w_full[keep]
    return LinearClassifier(
        w=w,
        mu_a_hat=mu_a,
        chosen_lambda=None,
        method="fair",
        support=np.flatnonzero(w),
        meta={"m": int(grid[chosen])},
    )


METHOD_NAMES = ("road", "sroad1", "sroad2", "droad", "nb", "fair")


def _fit_method(name: str, train: LabeledData, config: CcdConfig, folds: int,
                rng: RngStream) -> LinearClassifier:
    if name == "road":
        return fit_road(train, config, folds, rng)[0]
    if name == "droad":
        return fit_droad(train, config, folds, rng)[0]
    if name == "sroad1":
        return fit_sroad(train, 1, config=config, folds=folds, rng=rng)[0]
    if name == "sroad2":
        return fit_sroad(train, 2, config=config, folds=folds, rng=rng)[0]
    if name == "nb":
        return naive_bayes_fit(train)
    if name == "fair":
        return fair_like_fit(train, folds, rng)
    raise DimensionMismatch(f"unknown method {name!r}; choose from {METHOD_NAMES}")


@dataclass(frozen=True)
class MethodSummary:
    """Per-method replication results; errors are percentages."""

    name: str
    errors: np.ndarray
    nonzeros: np.ndarray

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors))

    @property
    def error_sd(self) -> float:
        return float(self.errors.std(ddof=1)) if self.errors.size > 1 else 0.0

    @property
    def median_nonzero(self) -> float:
        return float(np.median(self.nonzeros))

    @property
    def nonzero_sd(self) -> float:
        return float(self.nonzeros.std(ddof=1)) if self.nonzeros.size > 1 else 0.0


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated medians over completed replications.

    Failed replications are skipped and counted, never imputed; the
    oracle column holds the analytic best-possible error per
    replication.  ``runtime_seconds`` stays out of serialized tables so
    identical seeds give byte-identical files.
    """

    scenario: Scenario
    methods: list
    oracle_errors: np.ndarray
    replications: int
    completed: int
    failures: int
    runtime_seconds: float

    @property
    def oracle_median(self) -> float:
        return float(np.median(self.oracle_errors))

    def summary(self, name: str) -> MethodSummary:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def table_rows(self) -> list:
        """(method, median error %, error sd, median nonzero, nonzero sd)."""
        rows = [
            (m.name, m.median_error, m.error_sd, m.median_nonzero, m.nonzero_sd)
            for m in self.methods
        ]
        rows.append(("oracle", self.oracle_median,
                     float(self.oracle_errors.std(ddof=1)) if self.completed > 1 else 0.0,
                     float("nan"), float("nan")))
        return rows


def run_experiment(scenario: Scenario, methods, replications: int, folds: int,
                   rng: RngStream, config: CcdConfig | None = None,
                   threads: int = 1) -> ExperimentReport:
    """Replicate the scenario and aggregate test errors per method.

    Every replication owns derived random streams keyed by its index, so
    the report is identical for any thread count.  A replication that
    raises a package error is logged as a failure and skipped.
    """
    config = config if config is not None else CcdConfig()
    methods = list(methods)
    for name in methods:
        if name not in METHOD_NAMES:
            raise DimensionMismatch(f"unknown method {name!r}; choose from {METHOD_NAMES}")
    if replications < 1:
        raise DimensionMismatch("need at least one replication")

    sigma = make_covariance(scenario.covariance, scenario.p)
    chol = np.linalg.cholesky(sigma)
    needs_factor = not isinstance(scenario.covariance, (Equicorrelation, BlockDiagonal))
    factor = cho_factor(sigma, lower=True, check_finite=False) if needs_factor else None

    def one_replication(rep: int):
        rep_rng = rng.substream(rep)
        mu2 = make_signal(scenario.signal, scenario.p, rep_rng.substream(0))
        gen = rep_rng.substream(1).generator()
        train = _draw_labeled(mu2, chol, scenario.n_per_class, gen)
        test = _draw_labeled(mu2, chol, scenario.n_per_class, gen)
        delta = _analytic_delta(scenario, factor, mu2)
        oracle = 100.0 * (1.0 - float(gaussian_cdf(np.sqrt(max(delta, 0.0)))))
        results = {}
        for i, name in enumerate(methods):
            clf = _fit_method(name, train, config, folds, rep_rng.substream(10 + i))
            results[name] = (100.0 * test_error(clf, test), clf.support.size)
        return oracle, results

    start = time.perf_counter()
    outcomes = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {rep: pool.submit(one_replication, rep) for rep in range(replications)}
        for rep, fut in futures.items():
            try:
                outcomes[rep] = fut.result()
            except RoadError:
                outcomes[rep] = None
    else:
        for rep in range(replications):
            try:
                outcomes[rep] = one_replication(rep)
            except RoadError:
                outcomes[rep] = None
    runtime = time.perf_counter() - start

    completed = [outcomes[rep] for rep in range(replications) if outcomes[rep] is not None]
    failures = replications - len(completed)
    oracle_errors = np.array([c[0] for c in completed])
    summaries = [
        MethodSummary(
            name=name,
            errors=np.array([c[1][name][0] for c in completed]),
            nonzeros=np.array([c[1][name][1] for c in completed]),
        )
        for name in methods
    ]
    return ExperimentReport(
        scenario=scenario,
        methods=summaries,
        oracle_errors=oracle_errors,
        replications=replications,
        completed=len(completed),
        failures=failures,
        runtime_seconds=runtime,
    )


def gamma_sensitivity(scenario: Scenario, gammas, methods=("road",),
                      replications: int = 10, folds: int = 5,
                      rng: RngStream = RngStream(0),
                      config: CcdConfig | None = None, threads: int = 1) -> list:
    """Rerun the experiment once per affine-penalty weight.

    The same master stream is reused for every weight, so each study
    sees identical datasets and differences isolate the penalty effect.
    Returns [(gamma, ExperimentReport), ...].
    """
    base = config if config is not None else CcdConfig()
    out = []
    for gamma in gammas:
        if gamma <= 0.0:
            raise DimensionMismatch("gamma values must be positive")
        cfg = CcdConfig(
            gamma=float(gamma), tau=base.tau, grid_size=base.grid_size,
            tol=base.tol, max_cycles=base.max_cycles,
        )
        out.append((float(gamma), run_experiment(
            scenario, methods, replications, folds, rng, config=cfg, threads=threads,
        )))
    return out
