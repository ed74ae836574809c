import math

import numpy as np
import pytest

from lshqs import Dataset, SeedSpec
from lshqs.kde import (
    KernelSpec,
    build_hbe,
    default_density_floor,
    estimate_all,
    exact_kde,
    gaussian_kernel,
    hbe_estimate,
)
from lshqs.synthetic import gaussian_mixture


SPEC = KernelSpec(sigma=0.7)


class TestGaussianKernel:
    def test_zero_distance(self):
        x = np.array([1.0, 2.0, 3.0])
        assert gaussian_kernel(x, x, SPEC) == 1.0

    def test_one_sigma(self):
        x = np.zeros(2)
        y = np.array([SPEC.sigma, 0.0])
        assert gaussian_kernel(x, y, SPEC) == pytest.approx(math.exp(-1), rel=1e-12)
        assert gaussian_kernel(x, y, SPEC) == pytest.approx(0.367879441, abs=1e-9)

    def test_two_sigma(self):
        x = np.zeros(1)
        y = np.array([2 * SPEC.sigma])
        assert gaussian_kernel(x, y, SPEC) == pytest.approx(0.018315639, abs=1e-9)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            x, y = rng.normal(size=(2, 4))
            k = gaussian_kernel(x, y, SPEC)
            assert k == gaussian_kernel(y, x, SPEC)
            assert 0 < k <= 1

    def test_decreasing_in_distance(self):
        x = np.zeros(2)
        ks = [gaussian_kernel(x, np.array([d, 0.0]), SPEC)
              for d in np.linspace(0.1, 3, 15)]
        assert all(a > b for a, b in zip(ks, ks[1:]))

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_kernel(np.zeros(2), np.zeros(3), SPEC)

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            KernelSpec(sigma=0.0)


class TestExactKde:
    def test_singleton_at_query(self):
        data = Dataset([[0.3, 0.4]])
        assert exact_kde(data, [0.3, 0.4], SPEC) == 1.0

    def test_two_point_analytic(self):
        q = np.zeros(2)
        data = Dataset([q, [SPEC.sigma, 0.0]])
        expected = (1 + math.exp(-1)) / 2
        assert exact_kde(data, q, SPEC) == pytest.approx(expected, rel=1e-12)
        assert exact_kde(data, q, SPEC) == pytest.approx(0.683939721, abs=1e-9)

    def test_matches_double_loop(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(100, 3))
        data = Dataset(X)
        q = rng.normal(size=3)
        reference = 0.0
        for row in X:
            d2 = 0.0
            for j in range(3):
                d2 += (q[j] - row[j]) ** 2
            reference += math.exp(-d2 / SPEC.sigma**2)
        reference /= 100
        assert exact_kde(data, q, SPEC) == pytest.approx(reference, rel=1e-12)

    def test_range(self):
        rng = np.random.default_rng(13)
        data = Dataset(rng.normal(size=(50, 2)))
        for _ in range(10):
            v = exact_kde(data, rng.normal(size=2), SPEC)
            assert 0 < v <= 1

    def test_duplicate_of_query_never_decreases(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(30, 2))
        q = rng.normal(size=2)
        before = exact_kde(Dataset(X), q, SPEC)
        after = exact_kde(Dataset(np.vstack([X, q])), q, SPEC)
        assert after >= before


class TestBuildHbe:
    def test_singleton_tables(self):
        data = Dataset([[1.0, 1.0]])
        est = build_hbe(data, SPEC, epsilon=0.5, mu=0.5, seed=3)
        for j in range(est.n_tables):
            _, starts, keys = est.table_structure(j)
            assert len(keys) == 1
            assert starts[-1] == 1

    def test_deterministic(self):
        data = gaussian_mixture(100, [[0, 0]], seed=1)
        a = build_hbe(data, SPEC, epsilon=0.3, mu=0.1, seed=5)
        b = build_hbe(data, SPEC, epsilon=0.3, mu=0.1, seed=5)
        assert a.n_tables == b.n_tables
        for j in range(a.n_tables):
            for got, want in zip(a.table_structure(j), b.table_structure(j)):
                np.testing.assert_array_equal(got, want)

    def test_repetition_sizing(self):
        data = gaussian_mixture(2000, [[0, 0]], seed=2)
        est = build_hbe(data, SPEC, epsilon=0.2, mu=0.01, seed=1)
        assert est.means == math.ceil(3 / (0.2**2 * math.sqrt(0.01)))
        assert est.medians == 9
        assert est.n_tables == est.means * est.medians

    def test_means_capped_at_n(self):
        data = gaussian_mixture(50, [[0, 0]], seed=2)
        est = build_hbe(data, SPEC, epsilon=0.05, mu=0.001, seed=1)
        assert est.means == 50

    def test_parameter_validation(self):
        data = Dataset([[0.0]])
        with pytest.raises(ValueError):
            build_hbe(data, SPEC, epsilon=1.5, mu=0.1, seed=0)
        with pytest.raises(ValueError):
            build_hbe(data, SPEC, epsilon=0.2, mu=0.0, seed=0)

    def test_build_holds_projections_not_tables(self):
        # table structures are regrouped on demand; the estimator itself must
        # not retain n * tables state even when the table count is large
        data = gaussian_mixture(500, [[0, 0]], seed=3)
        est = build_hbe(data, SPEC, epsilon=0.1, mu=0.004, seed=1)
        assert est.n_tables > 4000
        held = sum(v.nbytes for v in vars(est).values()
                   if isinstance(v, np.ndarray))
        assert held <= est.n_tables * (data.dim + 1) * 8 + 1024


class TestHbeEstimate:
    def test_singleton_dataset_exact_one(self):
        q = np.array([2.0, -1.0])
        data = Dataset([q])
        for seed in (0, 1, 99):
            est = build_hbe(data, SPEC, epsilon=0.4, mu=0.5, seed=seed)
            assert hbe_estimate(est, data, q) == 1.0

    def test_multiplicative_accuracy(self):
        data = gaussian_mixture(2000, [[0, 0], [4, 0]], sigma=1.0, seed=21)
        est = build_hbe(data, SPEC, epsilon=0.2, mu=0.01,
                        seed=SeedSpec(5).child("hbe"))
        rng = np.random.default_rng(77)
        centers = np.array([[0.0, 0.0], [4.0, 0.0]])
        Q = centers[rng.integers(0, 2, 400)] + rng.normal(size=(400, 2))
        exact = np.array([exact_kde(data, q, SPEC) for q in Q])
        Q = Q[exact >= 0.01][:200]
        exact = np.array([exact_kde(data, q, SPEC) for q in Q])
        assert len(Q) == 200
        approx = est.estimate_many(Q)
        rel = np.abs(approx - exact) / exact
        assert (rel <= 0.2).mean() >= 0.95

    def test_single_sample_unbiased(self):
        # mean of 100 independent single estimates within 3 standard errors
        rng = np.random.default_rng(3)
        data = Dataset(rng.uniform(-2, 2, size=(1000, 2)))
        spec = KernelSpec(0.5)
        est = build_hbe(data, spec, epsilon=0.3, mu=0.05, seed=11)
        q = np.array([0.3, -0.2])
        singles = est.single_estimates(q)[:100]
        target = exact_kde(data, q, spec)
        se = singles.std(ddof=1) / math.sqrt(len(singles))
        assert abs(singles.mean() - target) <= 3 * se

    def test_repeated_query_deterministic(self):
        data = gaussian_mixture(300, [[0, 0]], seed=4)
        est = build_hbe(data, SPEC, epsilon=0.3, mu=0.05, seed=2)
        q = np.array([0.1, 0.2])
        assert hbe_estimate(est, data, q) == hbe_estimate(est, data, q)

    def test_nonnegative(self):
        data = gaussian_mixture(200, [[0, 0]], seed=5)
        est = build_hbe(data, SPEC, epsilon=0.4, mu=0.1, seed=6)
        rng = np.random.default_rng(8)
        vals = est.estimate_many(rng.uniform(-6, 6, size=(50, 2)))
        assert np.all(vals >= 0)


class TestEstimateAll:
    def test_single_point(self):
        data = Dataset([[5.0]])
        for mode in ("exact", "hbe"):
            out = estimate_all(data, SPEC, mode=mode, seed=SeedSpec(1))
            np.testing.assert_allclose(out.values, [1.0])

    def test_exact_equals_pointwise(self):
        data = gaussian_mixture(120, [[0, 0], [3, 3]], seed=6)
        out = estimate_all(data, SPEC, mode="exact")
        pointwise = np.array([exact_kde(data, x, SPEC) for x in data.X])
        np.testing.assert_allclose(out.values, pointwise, rtol=1e-12)
        assert out.estimator_tag == "exact"

    def test_hbe_tracks_exact(self):
        data = gaussian_mixture(2000, [[0, 0], [4, 0]], sigma=1.0, seed=21)
        out = estimate_all(data, SPEC, mode="hbe", epsilon=0.2, mu=0.01,
                           seed=SeedSpec(3))
        exact = estimate_all(data, SPEC, mode="exact").values
        sel = exact >= 0.01
        rel = np.abs(out.values[sel] - exact[sel]) / exact[sel]
        assert (rel <= 0.2).mean() >= 0.95

    def test_hbe_deterministic(self):
        data = gaussian_mixture(400, [[0, 0]], seed=7)
        a = estimate_all(data, SPEC, mode="hbe", epsilon=0.3, seed=SeedSpec(9))
        b = estimate_all(data, SPEC, mode="hbe", epsilon=0.3, seed=SeedSpec(9))
        np.testing.assert_array_equal(a.values, b.values)

    def test_ordering_fidelity(self):
        # pairs separated by >= (1+eps)/(1-eps) in exact density keep their
        # order under the approximate estimates for >= 95% of sampled pairs
        eps = 0.2
        data = gaussian_mixture(2000, [[0, 0], [4, 0]], sigma=1.0, seed=21)
        approx = estimate_all(data, SPEC, mode="hbe", epsilon=eps, mu=0.01,
                              seed=SeedSpec(13)).values
        exact = estimate_all(data, SPEC, mode="exact").values
        rng = np.random.default_rng(99)
        ratio = (1 + eps) / (1 - eps)
        kept = 0
        agree = 0
        while kept < 500:
            i, j = rng.integers(0, data.n, size=2)
            if exact[i] < exact[j]:
                i, j = j, i
            if exact[j] == 0 or exact[i] / exact[j] < ratio:
                continue
            kept += 1
            agree += approx[i] > approx[j]
        assert agree / kept >= 0.95

    def test_default_floor(self):
        assert default_density_floor(4) == 0.5
        assert default_density_floor(1) == 0.99
        assert 0 < default_density_floor(10**6) < 1
