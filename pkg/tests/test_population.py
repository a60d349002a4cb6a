import numpy as np
import pytest

from conftest import random_spd
from road.errors import EmptySubset, NonPositiveEigenvalue, ZeroDirection
from road.numerics import RngStream, gaussian_cdf, sym_solve
from road.population import (
    FIGURE1_DIM,
    FIGURE1_SIGNAL,
    PopulationModel,
    classifier_error,
    efficiency_ratio_equal_loading,
    equicorr_delta,
    figure1_table,
    fisher_rates,
    restricted_fisher_error,
    two_feature_delta,
)


def random_model(p, seed):
    gen = RngStream(seed, 5).generator()
    sigma = random_spd(p, gen)
    mu_d = gen.standard_normal(p)
    return PopulationModel.from_mean_difference(mu_d, sigma)


class TestClassifierError:
    def test_zero_mean_difference_is_coin_flip(self):
        model = PopulationModel(mu1=np.ones(3), mu2=np.ones(3), sigma=np.eye(3))
        assert classifier_error(np.array([1.0, 0, 0]), model) == 0.5

    def test_margin_half_gives_paper_anchor(self):
        # unit-variance direction with w'mu_d = 0.5
        model = PopulationModel.from_mean_difference([0.5, 0.0], np.eye(2))
        err = classifier_error(np.array([1.0, 0.0]), model)
        assert round(100 * err, 1) == 30.9

    def test_zero_direction_raises(self):
        model = random_model(4, 0)
        with pytest.raises(ZeroDirection):
            classifier_error(np.zeros(4), model)

    def test_scale_invariance(self):
        model = random_model(6, 1)
        w = RngStream(2).generator().standard_normal(6)
        base = classifier_error(w, model)
        for a in (1e-3, 0.5, 7.0, 1e4):
            assert classifier_error(a * w, model) == pytest.approx(base, abs=1e-14)

    def test_fisher_direction_attains_fisher_error(self):
        for seed in range(10):
            model = random_model(5, seed)
            w = sym_solve(model.sigma, model.mu_d)
            rates = fisher_rates(model)
            assert classifier_error(w, model) == pytest.approx(
                rates.fisher_error, abs=1e-10
            )

    def test_equicorrelation_oracle_value(self):
        # p=1000, rho=0.5, ten signal coordinates at 0.5: error about 1.31%
        p = 1000
        rho = 0.5
        mu_d = np.zeros(p)
        mu_d[:10] = 0.5
        sigma = (1 - rho) * np.eye(p) + rho * np.ones((p, p))
        model = PopulationModel.from_mean_difference(mu_d, sigma)
        w = sym_solve(sigma, mu_d)
        err = classifier_error(w, model)
        assert err == pytest.approx(0.0131, abs=2e-4)
        # closed form agrees with the dense solve
        delta = equicorr_delta(mu_d, rho)
        assert err == pytest.approx(1 - gaussian_cdf(np.sqrt(delta)), abs=1e-12)


class TestFisherRates:
    def test_identity_covariance(self):
        mu_d = np.zeros(25)
        mu_d[:10] = 0.5
        model = PopulationModel.from_mean_difference(mu_d, np.eye(25))
        rates = fisher_rates(model)
        assert rates.delta_p == pytest.approx(2.5, abs=1e-12)
        assert rates.gamma_p == pytest.approx(2.5, abs=1e-12)
        assert rates.fisher_error == pytest.approx(0.0569230, abs=1e-6)
        assert rates.fisher_error == rates.nb_error

    def test_condition_number_ten_ratio(self):
        # half the spectrum at 2/11, half at 20/11: ratio is exactly 3.025
        lam = np.array([2 / 11] * 5 + [20 / 11] * 5)
        model = PopulationModel.from_mean_difference(np.ones(10), np.diag(lam))
        rates = fisher_rates(model)
        assert rates.efficiency_ratio == pytest.approx(3.025, abs=1e-10)

    def test_eigenvector_mean_difference_gives_ratio_one(self):
        gen = RngStream(4).generator()
        sigma = random_spd(5, gen)
        _, vecs = np.linalg.eigh(sigma)
        model = PopulationModel.from_mean_difference(vecs[:, 2], sigma)
        rates = fisher_rates(model)
        assert rates.efficiency_ratio == pytest.approx(1.0, abs=1e-10)

    def test_ratio_at_least_one_and_matches_spectrum(self):
        for seed in range(10):
            model = random_model(5, seed)
            rates = fisher_rates(model)
            assert rates.efficiency_ratio >= 1.0 - 1e-12
            assert rates.fisher_error <= rates.nb_error + 1e-12
            # eigen-decomposition route for delta and gamma
            lam, vecs = np.linalg.eigh(model.sigma)
            a = vecs.T @ model.mu_d
            delta_eig = float(np.sum(a**2 / lam))
            gamma_eig = float(np.sum(a**2) ** 2 / np.sum(lam * a**2))
            assert rates.delta_p == pytest.approx(delta_eig, rel=1e-9)
            assert rates.gamma_p == pytest.approx(gamma_eig, rel=1e-9)


class TestTwoFeatureDelta:
    def test_identity(self):
        assert two_feature_delta([1.0, 1.0], 0.0) == pytest.approx(2.0)

    def test_stylized_pair_values(self):
        assert two_feature_delta([4.0, 0.5], -0.25) == pytest.approx(18.4, abs=1e-10)
        assert two_feature_delta([4.0, 1.0], 0.0) == pytest.approx(17.0, abs=1e-10)

    def test_opposite_signs_increasing(self):
        grid = np.linspace(0, 0.99, 200)
        vals = [two_feature_delta([1.0, -0.5], r) for r in grid]
        assert np.all(np.diff(vals) > 0)

    def test_same_signs_dip_at_ratio(self):
        mu = [1.0, 0.4]
        grid = np.linspace(0, 0.99, 991)
        vals = np.array([two_feature_delta(mu, r) for r in grid])
        dip = grid[np.argmin(vals)]
        assert dip == pytest.approx(0.4, abs=5e-3)
        before = vals[(grid > 0.0) & (grid < 0.39)]
        after = vals[(grid > 0.41)]
        assert np.all(np.diff(before) < 0)
        assert np.all(np.diff(after) > 0)


class TestEfficiencyRatioEqualLoading:
    def test_flat_spectrum(self):
        assert efficiency_ratio_equal_loading(np.ones(7)) == pytest.approx(1.0)

    def test_two_point_spectrum(self):
        rho = 0.5
        assert efficiency_ratio_equal_loading([1 + rho, 1 - rho]) == pytest.approx(
            4 / 3, abs=1e-12
        )

    def test_condition_ten_split(self):
        lam = [2 / 11] * 6 + [20 / 11] * 6
        assert efficiency_ratio_equal_loading(lam) == pytest.approx(3.025, abs=1e-10)

    def test_rescaling_is_applied(self):
        # same spectrum scaled by 100 must give the same ratio
        lam = np.array([0.2, 0.5, 1.3, 2.0])
        assert efficiency_ratio_equal_loading(lam) == pytest.approx(
            efficiency_ratio_equal_loading(100 * lam), rel=1e-12
        )

    def test_nonpositive_rejected(self):
        with pytest.raises(NonPositiveEigenvalue):
            efficiency_ratio_equal_loading([1.0, 0.0, 2.0])


class TestRestrictedFisher:
    def test_full_subset_matches_fisher(self):
        model = random_model(6, 3)
        full = restricted_fisher_error(model, np.arange(6))
        assert full == pytest.approx(fisher_rates(model).fisher_error, abs=1e-12)

    def test_single_feature(self):
        model = random_model(5, 8)
        j = 2
        expected = 1 - gaussian_cdf(abs(model.mu_d[j]) / np.sqrt(model.sigma[j, j]))
        assert restricted_fisher_error(model, [j]) == pytest.approx(expected, abs=1e-12)

    def test_empty_subset_raises(self):
        with pytest.raises(EmptySubset):
            restricted_fisher_error(random_model(4, 1), [])

    def test_figure_model_independent_case(self):
        # at rho=0 the ten-feature restriction attains the full Fisher rate
        p = FIGURE1_DIM
        mu_d = np.zeros(p)
        mu_d[:10] = FIGURE1_SIGNAL
        model = PopulationModel.from_mean_difference(mu_d, np.eye(p))
        sub10 = restricted_fisher_error(model, np.arange(10))
        # ||signal||^2 = 25, so the rate is 1 - Phi(5), essentially zero
        assert sub10 == pytest.approx(float(1 - gaussian_cdf(5.0)), abs=1e-12)
        assert sub10 < 1e-6


class TestEquicorrClosedForm:
    def test_matches_dense_solve(self):
        gen = RngStream(6).generator()
        for p in (2, 5, 37, 200):
            rho = float(gen.uniform(-0.9 / (p - 1), 0.95))
            mu_d = gen.standard_normal(p)
            sigma = (1 - rho) * np.eye(p) + rho * np.ones((p, p))
            direct = float(sym_solve(sigma, mu_d) @ mu_d)
            assert equicorr_delta(mu_d, rho) == pytest.approx(direct, abs=1e-8)


class TestFigure1Table:
    def test_independence_row_collapses(self):
        rows = figure1_table([0.0])
        rho, fisher, nb, sub10, sub20 = rows[0]
        assert rho == 0.0
        assert fisher == pytest.approx(nb, abs=1e-15)
        assert fisher == pytest.approx(sub10, abs=1e-15)
        assert fisher == pytest.approx(float(1 - gaussian_cdf(5.0)), abs=1e-12)

    def test_fisher_vanishes_and_nb_grows(self):
        grid = np.arange(0.0, 0.96, 0.05)
        rows = figure1_table(grid)
        fisher = rows[:, 1]
        nb = rows[:, 2]
        assert fisher[-1] < 1e-12
        assert np.all(np.diff(fisher) <= 1e-15)
        assert np.all(np.diff(nb) >= -1e-15)

    def test_restricted_rules_bracket_fisher(self):
        rows = figure1_table(np.arange(0.05, 0.95, 0.05))
        fisher, nb, sub10, sub20 = rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4]
        assert np.all(fisher <= sub20 + 1e-15)
        assert np.all(sub20 <= sub10 + 1e-15)
        assert np.all(sub10 <= nb + 1e-15)

    def test_closed_forms_match_block_solves(self):
        rho = 0.35
        rows = figure1_table([rho])
        mu10 = FIGURE1_SIGNAL
        sigma10 = (1 - rho) * np.eye(10) + rho * np.ones((10, 10))
        expected = 1 - gaussian_cdf(np.sqrt(sym_solve(sigma10, mu10) @ mu10))
        assert rows[0, 3] == pytest.approx(float(expected), abs=1e-10)
