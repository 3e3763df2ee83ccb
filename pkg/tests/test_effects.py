import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_supplied_nuisances
from hteforest import (
    Dataset,
    DrScores,
    NuisanceEstimates,
    ate_aipw,
    compute_dr_scores,
    difference_in_means,
    group_ates,
)
from hteforest.errors import SizeError, ValidationError


def seven_row_dataset():
    """treated outcomes {1,0,1,1}, control outcomes {0,0,1}"""
    y = np.array([1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0])
    w = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    return Dataset(np.arange(7.0).reshape(-1, 1), w, y)


class TestDifferenceInMeans:
    def test_seven_row_hand_values(self):
        res = difference_in_means(seven_row_dataset())
        # 3/4 - 1/3 = 5/12; SE = sqrt(0.25/4 + (1/3)/3) = sqrt(25/144) = 5/12
        np.testing.assert_allclose(res.estimate, 5 / 12, rtol=1e-12)
        np.testing.assert_allclose(res.std_error, 5 / 12, rtol=1e-12)
        assert res.method == "diff_means"

    def test_equal_means_zero(self):
        y = np.array([1.0, 2.0, 1.0, 2.0])
        w = np.array([1.0, 1.0, 0.0, 0.0])
        res = difference_in_means(Dataset(np.zeros((4, 1)), w, y))
        assert res.estimate == 0.0

    def test_binary_outcome_counts(self):
        # 1542 treated with 1506 healthy; 1000 control with 904 healthy
        y = np.concatenate([np.ones(1506), np.zeros(36), np.ones(904), np.zeros(96)])
        w = np.concatenate([np.ones(1542), np.zeros(1000)])
        res = difference_in_means(Dataset(np.zeros((2542, 1)), w, y))
        assert abs(res.estimate - 0.074) < 0.002
        assert abs(res.std_error - 0.009) < 0.002
        np.testing.assert_allclose(res.estimate, 1506 / 1542 - 904 / 1000, rtol=1e-12)

    def test_ci_brackets_estimate(self):
        res = difference_in_means(seven_row_dataset())
        assert res.ci_low < res.estimate < res.ci_high
        d = res.to_dict()
        np.testing.assert_allclose(
            d["ci_high"] - d["estimate"], 1.959963984540054 * d["std_error"]
        )


class TestDrScores:
    def test_perfect_fit_reduces_to_tau(self, tiny_dataset):
        # with m = 0 the residual Y - m - (W - e) tau is exactly zero
        rng = np.random.default_rng(32)
        tau = rng.normal(size=tiny_dataset.n)
        m = np.zeros(tiny_dataset.n)
        e = np.full(tiny_dataset.n, 0.4)
        y = (tiny_dataset.treatment - e) * tau
        ds = Dataset(tiny_dataset.covariates, tiny_dataset.treatment, y)
        nz = NuisanceEstimates(e, m, ds.treatment - e, y - m, "supplied")
        scores = compute_dr_scores(ds, nz, tau)
        np.testing.assert_array_equal(scores.gamma, tau)

    def test_pure_ipw_reduction(self, tiny_dataset):
        nz = make_supplied_nuisances(tiny_dataset, e=0.5, m=0.0)
        scores = compute_dr_scores(tiny_dataset, nz, np.zeros(tiny_dataset.n))
        expected = np.where(
            tiny_dataset.treatment == 1.0,
            2.0 * tiny_dataset.outcome,
            -2.0 * tiny_dataset.outcome,
        )
        np.testing.assert_allclose(scores.gamma, expected, rtol=1e-14)

    def test_hand_value(self):
        ds = Dataset(np.zeros((2, 1)), np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        e = np.full(2, 0.5)
        m = np.full(2, 0.3)
        nz = NuisanceEstimates(e, m, ds.treatment - e, ds.outcome - m, "supplied")
        scores = compute_dr_scores(ds, nz, np.full(2, 0.2))
        # 0.2 + (0.5/0.25) * (1 - 0.3 - 0.5*0.2) = 1.4
        np.testing.assert_allclose(scores.gamma[0], 1.4, rtol=1e-14)

    def test_propensity_guard(self, tiny_dataset):
        nz = make_supplied_nuisances(tiny_dataset)
        nz.e_hat = np.full(tiny_dataset.n, 1.0)
        with pytest.raises(ValidationError):
            compute_dr_scores(tiny_dataset, nz, np.zeros(tiny_dataset.n))

    def test_outcome_shift_cancels(self):
        # dyadic outcomes and shift keep Y + c - c exact in binary floats
        rng = np.random.default_rng(33)
        n = 24
        y = rng.integers(-8, 9, size=n) / 4.0
        w = np.zeros(n)
        w[::2] = 1.0
        ds = Dataset(rng.uniform(size=(n, 2)), w, y)
        tau = rng.integers(-4, 5, size=n) / 4.0
        nz = make_supplied_nuisances(ds, e=0.5, m=0.0)
        a = compute_dr_scores(ds, nz, tau)
        c = 16.0
        shifted = Dataset(ds.covariates, ds.treatment, ds.outcome + c)
        nz_c = make_supplied_nuisances(shifted, e=0.5, m=c)
        b = compute_dr_scores(shifted, nz_c, tau)
        np.testing.assert_array_equal(a.gamma, b.gamma)


class TestAteAipw:
    def test_constant_scores(self):
        res = ate_aipw(DrScores(np.ones(3)))
        assert res.estimate == 1.0
        assert res.std_error == 0.0

    def test_two_point(self):
        res = ate_aipw(DrScores(np.array([0.0, 2.0])))
        assert res.estimate == 1.0
        np.testing.assert_allclose(res.std_error, 1.0, rtol=1e-14)

    def test_mean_identity_bit_exact(self, tiny_dataset):
        nz = make_supplied_nuisances(tiny_dataset)
        scores = compute_dr_scores(tiny_dataset, nz, np.zeros(tiny_dataset.n))
        assert ate_aipw(scores).estimate == float(np.mean(scores.gamma))

    def test_horvitz_thompson_equivalence(self, tiny_dataset):
        e = 0.35
        nz = make_supplied_nuisances(tiny_dataset, e=e, m=0.0)
        scores = compute_dr_scores(tiny_dataset, nz, np.zeros(tiny_dataset.n))
        w, y = tiny_dataset.treatment, tiny_dataset.outcome
        ht = np.mean(w * y / e - (1 - w) * y / (1 - e))
        np.testing.assert_allclose(ate_aipw(scores).estimate, ht, rtol=1e-12)

    def test_too_few(self):
        with pytest.raises(SizeError):
            ate_aipw(DrScores(np.array([1.0])))


class TestGroupAtes:
    def test_bucket_means(self):
        g = np.arange(1.0, 9.0)
        res = group_ates(DrScores(g), g, num_groups=4)
        np.testing.assert_allclose([r.estimate for r in res], [1.5, 3.5, 5.5, 7.5])

    def test_constant_priority_index_order(self):
        g = np.array([5.0, 1.0, 4.0, 2.0, 8.0, 3.0, 7.0, 6.0])
        res = group_ates(DrScores(g), np.zeros(8), num_groups=4)
        np.testing.assert_allclose(
            [r.estimate for r in res], [3.0, 3.0, 5.5, 6.5]
        )

    def test_size_guard(self):
        with pytest.raises(SizeError):
            group_ates(DrScores(np.arange(7.0)), np.arange(7.0), num_groups=4)
        with pytest.raises(ValidationError):
            group_ates(DrScores(np.arange(8.0)), np.arange(8.0), num_groups=1)

    @given(
        n=st.integers(min_value=8, max_value=100),
        k=st.integers(min_value=2, max_value=4),
    )
    @settings(max_examples=40, deadline=None)
    def test_bucket_sizes_balanced(self, n, k):
        if n < 2 * k:
            return
        rng = np.random.default_rng(777)
        g = rng.normal(size=n)
        res = group_ates(DrScores(g), rng.normal(size=n), num_groups=k)
        sizes = [r.n for r in res]
        assert sum(sizes) == n
        assert max(sizes) - min(sizes) <= 1
