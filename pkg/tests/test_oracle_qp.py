import numpy as np
import pytest

from conftest import random_instance
from road.errors import DimensionTooLarge, Infeasible
from road.numerics import RngStream, gaussian_cdf, soft_threshold, sym_solve
from road.oracle_qp import (
    crosscheck_ccd,
    exact_path,
    exact_solve,
    exact_solve_l1_quadratic,
    exact_solve_penalized,
    feasibility_floor,
    ladder_path,
    verify_kkt,
)


class TestFeasibilityFloor:
    def test_flat_vector(self):
        assert feasibility_floor([1.0, 1.0]) == pytest.approx(1.0)

    def test_stylized_vector(self):
        assert feasibility_floor([4.0, 0.5, 1.0]) == pytest.approx(0.25)

    def test_below_floor_is_infeasible(self):
        sigma, mu = random_instance(3, 70)
        floor = feasibility_floor(mu)
        with pytest.raises(Infeasible):
            exact_solve(sigma, mu, 0.9 * floor)


class TestExactSolve:
    def test_fisher_regime_for_large_capacity(self):
        for seed in range(5):
            sigma, mu = random_instance(4, 80 + seed)
            fisher_raw = sym_solve(sigma, mu)
            delta = float(fisher_raw @ mu)
            w_fisher = fisher_raw / delta
            cap = 1.1 * float(np.abs(w_fisher).sum())
            sol = exact_solve(sigma, mu, cap)
            assert not sol.active_l1
            np.testing.assert_allclose(sol.w, w_fisher, atol=1e-9)
            assert sol.objective == pytest.approx(1.0 / delta, rel=1e-9)

    def test_symmetric_two_dim_binding_case(self):
        sol = exact_solve(np.eye(2), np.array([1.0, 1.0]), 1.0)
        np.testing.assert_allclose(sol.w, [0.5, 0.5], atol=1e-9)
        assert np.abs(sol.w).sum() == pytest.approx(1.0)

    def test_floor_capacity_single_support(self):
        sigma, mu = random_instance(5, 85)
        floor = feasibility_floor(mu)
        sol = exact_solve(sigma, mu, floor)
        assert np.count_nonzero(sol.w) == 1
        j = int(np.argmax(np.abs(mu)))
        assert sol.w[j] == pytest.approx(1.0 / mu[j])
        assert verify_kkt(sol, sigma, mu, floor) < 1e-8

    def test_three_feature_subset_ordering(self):
        # correlated pair beats the marginally-stronger uncorrelated pair
        sigma = np.array([[1.0, -0.25, 0.0], [-0.25, 1.0, 0.0], [0.0, 0.0, 1.0]])
        mu_full = np.array([4.0, 0.5, 1.0]) / 2.0
        deltas = {}
        for pair in ((0, 1), (0, 2)):
            idx = list(pair)
            sub_sigma = sigma[np.ix_(idx, idx)]
            sub_mu = mu_full[idx]
            sol = exact_solve(sub_sigma, sub_mu, 1e6)
            deltas[pair] = 1.0 / sol.objective
        # exponents scale by 1/4 under the half mean difference
        assert deltas[(0, 1)] == pytest.approx(18.4 / 4, rel=1e-9)
        assert deltas[(0, 2)] == pytest.approx(17.0 / 4, rel=1e-9)
        assert deltas[(0, 1)] > deltas[(0, 2)]

    def test_every_solution_passes_independent_kkt(self):
        for seed in range(10):
            sigma, mu = random_instance(4, 90 + seed)
            floor = feasibility_floor(mu)
            for c in (1.05 * floor, 1.5 * floor, 4.0 * floor):
                sol = exact_solve(sigma, mu, c)
                assert verify_kkt(sol, sigma, mu, c) < 1e-8

    def test_dimension_cap(self):
        with pytest.raises(DimensionTooLarge):
            exact_solve(np.eye(13), np.ones(13), 5.0)

    def test_matches_cvxpy_when_available(self):
        cvxpy = pytest.importorskip("cvxpy")
        for seed in range(3):
            sigma, mu = random_instance(5, 120 + seed)
            cap = 1.4 * feasibility_floor(mu)
            sol = exact_solve(sigma, mu, cap)
            w = cvxpy.Variable(5)
            problem = cvxpy.Problem(
                cvxpy.Minimize(cvxpy.quad_form(w, cvxpy.psd_wrap(sigma))),
                [mu @ w == 1.0, cvxpy.norm1(w) <= cap],
            )
            problem.solve(solver="CLARABEL")
            assert sol.objective == pytest.approx(problem.value, rel=1e-6, abs=1e-9)


class TestExactPath:
    def _grid(self, sigma, mu, points=25):
        floor = feasibility_floor(mu)
        fisher_raw = sym_solve(sigma, mu)
        cap = float(np.abs(fisher_raw / (fisher_raw @ mu)).sum())
        return np.linspace(1.02 * floor, 1.05 * cap, points)

    def test_objective_nonincreasing_in_capacity(self):
        sigma, mu = random_instance(4, 100)
        path = exact_path(sigma, mu, self._grid(sigma, mu))
        objs = [s.objective for s in path.solutions]
        assert all(a >= b - 1e-12 for a, b in zip(objs, objs[1:]))

    def test_midpoint_linearity_within_segments(self):
        sigma, mu = random_instance(4, 101)
        grid = self._grid(sigma, mu)
        path = exact_path(sigma, mu, grid)
        checked = 0
        for i in range(len(grid) - 1):
            a, b = path.solutions[i], path.solutions[i + 1]
            if not np.array_equal(a.sign_pattern, b.sign_pattern):
                continue
            if a.active_l1 != b.active_l1:
                continue  # binding switches inside: not one linear piece
            mid = exact_solve(sigma, mu, float((grid[i] + grid[i + 1]) / 2))
            if not np.array_equal(mid.sign_pattern, a.sign_pattern):
                continue
            if mid.active_l1 != a.active_l1:
                continue
            np.testing.assert_allclose(mid.w, (a.w + b.w) / 2, atol=1e-8)
            checked += 1
        assert checked >= 5

    def test_error_rate_lipschitz_along_path(self):
        sigma, mu = random_instance(4, 102)
        grid = self._grid(sigma, mu, points=40)
        path = exact_path(sigma, mu, grid)
        errors = np.array(
            [1 - gaussian_cdf(1.0 / np.sqrt(s.objective)) for s in path.solutions]
        )
        slopes = np.abs(np.diff(errors) / np.diff(grid))
        fine = np.linspace(grid[10], grid[11], 12)
        fine_path = exact_path(sigma, mu, fine)
        fine_err = np.array(
            [1 - gaussian_cdf(1.0 / np.sqrt(s.objective)) for s in fine_path.solutions]
        )
        fine_slopes = np.abs(np.diff(fine_err) / np.diff(fine))
        bound = 3.0 * slopes.max() + 1e-9
        assert fine_slopes.max() <= bound

    def test_breakpoints_annotated(self):
        sigma, mu = random_instance(4, 103)
        path = exact_path(sigma, mu, self._grid(sigma, mu))
        assert len(path.breakpoints) >= 1
        for i in path.breakpoints:
            assert not np.array_equal(
                path.solutions[i].sign_pattern, path.solutions[i + 1].sign_pattern
            )


class TestPenalizedOracles:
    def test_l1_quadratic_zero_solution(self):
        h = np.eye(3)
        b = np.array([0.2, -0.1, 0.05])
        w, obj = exact_solve_l1_quadratic(h, b, 0.5)
        np.testing.assert_array_equal(w, 0.0)
        assert obj == 0.0

    def test_l1_quadratic_identity_soft_threshold(self):
        # separable case: coordinates are soft-thresholds of b
        gen = RngStream(11).generator()
        b = gen.standard_normal(5)
        lam = 0.4
        w, _ = exact_solve_l1_quadratic(np.eye(5), b, lam)
        np.testing.assert_allclose(w, soft_threshold(b, lam), atol=1e-10)

    def test_penalized_equality_constraint_holds(self):
        for seed in range(5):
            sigma, mu = random_instance(4, 110 + seed)
            w, nu, obj = exact_solve_penalized(sigma, mu, 0.3)
            assert float(w @ mu) == pytest.approx(1.0, abs=1e-9)
            # stationarity on the support
            grad = 2 * sigma @ w - nu * mu
            nz = w != 0
            np.testing.assert_allclose(grad[nz], -0.3 * np.sign(w[nz]), atol=1e-7)

    def test_penalized_zero_penalty_is_fisher(self):
        sigma, mu = random_instance(5, 115)
        w, _, _ = exact_solve_penalized(sigma, mu, 0.0)
        fisher_raw = sym_solve(sigma, mu)
        np.testing.assert_allclose(w, fisher_raw / (fisher_raw @ mu), atol=1e-9)


class TestCrosscheck:
    def test_small_gap_on_seeded_instances(self):
        worst = 0.0
        for seed in range(5):
            p = 2 + seed
            sigma, mu = random_instance(p, 130 + seed)
            top = 10.0 * float(np.abs(mu).max())
            grid = np.geomspace(top, 1e-3 * top, 8)
            report = crosscheck_ccd(sigma, mu, grid, gamma_large=1e6)
            worst = max(worst, report.max_rel_gap)
        assert worst <= 1e-4

    def test_identity_covariance_matches_root_finding_form(self):
        # with identity covariance the constrained solution is a
        # soft-threshold of a scaled mean difference; find the scale by
        # bisection on the constraint and compare
        gen = RngStream(12).generator()
        mu = gen.standard_normal(5)
        lam = 0.05
        point = ladder_path(np.eye(5), mu, [lam], gamma_large=1e6)[0]
        w_hat = point.w / (point.w @ mu)

        def margin(nu):
            return float(mu @ soft_threshold(nu * mu, lam)) - 1.0

        lo, hi = 0.0, 10.0
        while margin(hi) < 0:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if margin(mid) < 0:
                lo = mid
            else:
                hi = mid
        expected = soft_threshold(hi * mu, lam)
        np.testing.assert_allclose(w_hat, expected, atol=1e-5)
