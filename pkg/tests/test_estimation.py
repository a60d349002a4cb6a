import numpy as np
import pytest

from road.errors import ConstantSample, DegenerateClass, DimensionMismatch, EmptyInput
from road.estimation import (
    LabeledData,
    estimate,
    pooled_diag_variance,
    standardize_samples,
    t_statistics,
)
from road.numerics import RngStream


def random_data(n1, n2, p, seed, shift=1.0):
    gen = RngStream(seed, 13).generator()
    x = gen.standard_normal((n1 + n2, p))
    x[n1:] += shift
    y = np.array([1] * n1 + [2] * n2)
    return LabeledData(x, y)


class TestLabeledData:
    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            LabeledData(np.empty((0, 3)), np.empty(0))

    def test_rejects_single_class(self):
        with pytest.raises(EmptyInput):
            LabeledData(np.zeros((3, 2)), [1, 1, 1])

    def test_rejects_bad_labels(self):
        with pytest.raises(DimensionMismatch):
            LabeledData(np.zeros((2, 2)), [1, 3])

    def test_rejects_non_finite(self):
        x = np.zeros((2, 2))
        x[0, 0] = np.nan
        with pytest.raises(DimensionMismatch):
            LabeledData(x, [1, 2])

    def test_subsetting(self):
        data = random_data(4, 4, 5, 0)
        sub = data.subset_features([0, 3])
        assert sub.p == 2
        np.testing.assert_array_equal(sub.x, data.x[:, [0, 3]])
        rows = data.subset_samples([0, 1, 4, 5])
        assert rows.n == 4


class TestEstimate:
    def test_hand_worked_example(self):
        data = LabeledData(
            np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [3.0, 1.0]]),
            [1, 1, 2, 2],
        )
        est = estimate(data)
        np.testing.assert_allclose(est.mu1_hat, [1.0, 0.0])
        np.testing.assert_allclose(est.mu2_hat, [2.0, 1.0])
        np.testing.assert_allclose(est.mu_d_hat, [0.5, 0.5])
        np.testing.assert_allclose(est.mu_a_hat, [1.5, 0.5])
        np.testing.assert_allclose(est.sigma_hat, [[2.0, 0.0], [0.0, 0.0]])

    def test_identical_clouds_zero_difference(self):
        x = RngStream(1).generator().standard_normal((4, 3))
        data = LabeledData(np.vstack([x, x]), [1] * 4 + [2] * 4)
        est = estimate(data)
        np.testing.assert_allclose(est.mu_d_hat, 0.0, atol=1e-15)

    def test_single_sample_class_raises(self):
        data = LabeledData(np.arange(6.0).reshape(3, 2), [1, 2, 2])
        with pytest.raises(DegenerateClass):
            estimate(data)

    def test_pooled_denominator(self):
        data = random_data(5, 7, 3, 2)
        est = estimate(data)
        x1 = data.class_rows(1)
        x2 = data.class_rows(2)
        s1 = np.cov(x1, rowvar=False, ddof=1)
        s2 = np.cov(x2, rowvar=False, ddof=1)
        expected = (4 * s1 + 6 * s2) / 10
        np.testing.assert_allclose(est.sigma_hat, expected, atol=1e-12)
        np.testing.assert_allclose(
            pooled_diag_variance(data), np.diag(expected), atol=1e-12
        )

    def test_within_class_permutation_invariance(self):
        data = random_data(6, 6, 4, 3)
        gen = RngStream(4).generator()
        idx1 = gen.permutation(6)
        idx2 = 6 + gen.permutation(6)
        shuffled = data.subset_samples(np.concatenate([idx1, idx2]))
        np.testing.assert_allclose(
            estimate(shuffled).sigma_hat, estimate(data).sigma_hat, atol=1e-12
        )

    def test_rank_deficient_still_succeeds(self):
        data = random_data(3, 3, 10, 5)  # n - 2 = 4 < p = 10
        est = estimate(data)
        eigs = np.linalg.eigvalsh(est.sigma_hat)
        assert eigs.min() > -1e-10  # PSD
        assert (eigs > 1e-10).sum() <= 4  # rank-deficient

    def test_full_rank_when_enough_samples(self):
        data = random_data(10, 10, 4, 6)
        eigs = np.linalg.eigvalsh(estimate(data).sigma_hat)
        assert eigs.min() > 1e-8


class TestTStatistics:
    def test_hand_worked_value(self):
        data = LabeledData(np.array([[0.0], [2.0], [3.0], [5.0]]), [1, 1, 2, 2])
        t = t_statistics(data)
        assert t[0] == pytest.approx(3 / np.sqrt(2), abs=1e-12)

    def test_constant_equal_feature_gives_zero(self):
        x = np.ones((6, 2))
        x[:, 1] = RngStream(7).generator().standard_normal(6)
        data = LabeledData(x, [1, 1, 1, 2, 2, 2])
        assert t_statistics(data)[0] == 0.0

    def test_constant_unequal_feature_gives_inf(self):
        x = np.ones((4, 1))
        x[2:] = 2.0
        data = LabeledData(x, [1, 1, 2, 2])
        assert t_statistics(data)[0] == np.inf

    def test_label_swap_negates(self):
        data = random_data(5, 8, 6, 8)
        flipped = LabeledData(data.x, 3 - data.y)
        np.testing.assert_allclose(
            t_statistics(flipped), -t_statistics(data), atol=1e-12
        )

    def test_matches_two_loop_brute_force(self):
        for seed in range(5):
            data = random_data(3, 2, 4, seed)
            t = t_statistics(data)
            for j in range(4):
                a = [data.x[i, j] for i in range(data.n) if data.y[i] == 1]
                b = [data.x[i, j] for i in range(data.n) if data.y[i] == 2]
                ma = sum(a) / len(a)
                mb = sum(b) / len(b)
                va = sum((v - ma) ** 2 for v in a) / (len(a) - 1)
                vb = sum((v - mb) ** 2 for v in b) / (len(b) - 1)
                expected = (mb - ma) / np.sqrt(va / len(a) + vb / len(b))
                assert t[j] == pytest.approx(expected, abs=1e-12)

    def test_pooled_variant(self):
        data = random_data(4, 9, 3, 11)
        t = t_statistics(data, pooled=True)
        x1, x2 = data.class_rows(1), data.class_rows(2)
        n1, n2 = 4, 9
        sp2 = ((n1 - 1) * x1.var(axis=0, ddof=1) + (n2 - 1) * x2.var(axis=0, ddof=1)) / (
            n1 + n2 - 2
        )
        expected = (x2.mean(axis=0) - x1.mean(axis=0)) / np.sqrt(sp2 * (1 / n1 + 1 / n2))
        np.testing.assert_allclose(t, expected, atol=1e-12)


class TestStandardizeSamples:
    def test_default_uses_unbiased_denominator(self):
        data = LabeledData(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]), [1, 2])
        out = standardize_samples(data)
        np.testing.assert_allclose(out.x[0], [-1.0, 0.0, 1.0], atol=1e-12)

    def test_population_denominator_variant(self):
        data = LabeledData(np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]), [1, 2])
        out = standardize_samples(data, ddof=0)
        np.testing.assert_allclose(
            out.x[0], [-1.2247448714, 0.0, 1.2247448714], atol=1e-9
        )

    def test_rows_have_zero_mean_unit_variance(self):
        data = random_data(5, 5, 8, 12)
        out = standardize_samples(data)
        np.testing.assert_allclose(out.x.mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.x.var(axis=1, ddof=1), 1.0, atol=1e-12)

    def test_idempotent(self):
        data = random_data(4, 4, 6, 13)
        once = standardize_samples(data)
        twice = standardize_samples(once)
        np.testing.assert_allclose(twice.x, once.x, atol=1e-12)

    def test_constant_row_raises(self):
        x = RngStream(14).generator().standard_normal((3, 4))
        x[1] = 2.5
        with pytest.raises(ConstantSample):
            standardize_samples(LabeledData(x, [1, 2, 2]))
