"""Sparse linear discriminants via constrained coordinate descent.

Library layout: :mod:`road.numerics` (shared primitives and the seeded
RNG contract), :mod:`road.population` (exact two-class Gaussian theory),
:mod:`road.estimation` (sample statistics), :mod:`road.ccd` (the
penalized coordinate-descent solver and its paths), :mod:`road.screening`
(permutation feature screening), :mod:`road.classifiers` (end-to-end
fitting with cross-validation), :mod:`road.oracle_qp` (exact
small-dimension reference solvers), :mod:`road.simulation` (Monte-Carlo
studies) and :mod:`road.cli` (command-line front end).
"""

from .ccd import (
    CcdConfig,
    CcdDiagnostics,
    CcdProblem,
    PathPoint,
    SolutionPath,
    coordinate_update,
    kkt_max_violation,
    lambda_max,
    solve_at,
    solve_path,
)
from .classifiers import (
    CvResult,
    LinearClassifier,
    classify,
    estimate_error,
    fit_droad,
    fit_road,
    fit_sroad,
    predict,
    test_error,
)
from .errors import RoadError, RoadInputError, RoadNumericalError
from .estimation import (
    LabeledData,
    SampleEstimates,
    estimate,
    standardize_samples,
    t_statistics,
)
from .numerics import (
    RngStream,
    empirical_quantile,
    gaussian_cdf,
    soft_threshold,
    sym_solve,
)
from .oracle_qp import (
    CrosscheckReport,
    ExactPath,
    ExactSolution,
    crosscheck_ccd,
    exact_path,
    exact_solve,
    feasibility_floor,
    verify_kkt,
)
from .population import (
    PopulationModel,
    TheoreticalRates,
    classifier_error,
    efficiency_ratio_equal_loading,
    equicorr_delta,
    figure1_table,
    fisher_rates,
    restricted_fisher_error,
    two_feature_delta,
)
from .screening import (
    ScreeningResult,
    expand_correlated,
    permutation_screen,
    top_k_screen,
)
from .simulation import (
    BlockDiagonal,
    Equicorrelation,
    ExperimentReport,
    FixedSignal,
    LaplaceSignal,
    MethodSummary,
    RandomFactor,
    Scenario,
    SparseFixed,
    fair_like_fit,
    gamma_sensitivity,
    make_covariance,
    make_signal,
    naive_bayes_fit,
    run_experiment,
    sample_dataset,
)

__version__ = "0.1.0"
