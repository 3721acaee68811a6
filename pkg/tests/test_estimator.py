import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darp.errors import InvalidInput, MissingClass, SingularConfusion
from darp.estimator import aggregate_predictions, build_confusion, estimate_marginals


class TestBuildConfusion:
    def test_confident_correct_is_identity(self):
        probs = np.eye(3)[[0, 1, 2, 2, 0]]
        c = build_confusion(probs, [0, 1, 2, 2, 0])
        np.testing.assert_array_equal(c.values, np.eye(3))

    def test_column_mean(self):
        probs = [[0.8, 0.2], [0.6, 0.4], [0.1, 0.9]]
        c = build_confusion(probs, [0, 0, 1])
        np.testing.assert_allclose(c.values[:, 0], [0.7, 0.3], rtol=1e-15)
        np.testing.assert_allclose(c.values[:, 1], [0.1, 0.9], rtol=1e-15)

    def test_uniform_predictions(self):
        c = build_confusion(np.full((6, 3), 1 / 3), [0, 1, 2, 0, 1, 2])
        np.testing.assert_allclose(c.values, 1 / 3, rtol=1e-15)

    def test_missing_class(self):
        with pytest.raises(MissingClass, match="class 1"):
            build_confusion([[0.5, 0.5], [0.9, 0.1]], [0, 0])

    def test_label_range(self):
        with pytest.raises(InvalidInput):
            build_confusion([[0.5, 0.5]], [2])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sample_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        probs = rng.dirichlet(np.ones(4), size=30)
        truth = np.concatenate([np.arange(4), rng.integers(0, 4, size=26)])
        perm = rng.permutation(30)
        a = build_confusion(probs, truth).values
        b = build_confusion(probs[perm], truth[perm]).values
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-16)


class TestEstimateMarginals:
    def test_identity(self):
        est = estimate_marginals(np.eye(2), [30.0, 70.0])
        np.testing.assert_array_equal(est.marginals.mass, [30.0, 70.0])
        assert not est.was_clamped
        assert est.condition == pytest.approx(1.0)

    def test_round_trip(self):
        c = np.array([[0.8, 0.3], [0.2, 0.7]])
        totals = c @ np.array([100.0, 0.0])
        est = estimate_marginals(c, totals)
        np.testing.assert_allclose(est.marginals.mass, [100.0, 0.0], rtol=1e-12, atol=1e-12)

    def test_negative_solution_is_clamped(self):
        c = np.array([[0.8, 0.3], [0.2, 0.7]])
        est = estimate_marginals(c, [95.0, 5.0])
        assert est.was_clamped
        assert est.raw[1] < 0
        np.testing.assert_allclose(est.marginals.mass, [100.0, 0.0])

    def test_singular(self):
        with pytest.raises(SingularConfusion):
            estimate_marginals([[0.5, 0.5], [0.5, 0.5]], [10.0, 10.0])

    def test_shape_checks(self):
        with pytest.raises(InvalidInput):
            estimate_marginals(np.eye(2), [1.0, 2.0, 3.0])
        with pytest.raises(InvalidInput):
            estimate_marginals(np.eye(2), [-1.0, 2.0])

    def test_aggregate(self):
        np.testing.assert_allclose(aggregate_predictions([[0.2, 0.8], [0.5, 0.5]]), [0.7, 1.3])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 8))
    def test_sanitized_output_sums_to_total(self, seed, k):
        rng = np.random.default_rng(seed)
        c = 0.5 * np.eye(k) + 0.5 * rng.dirichlet(np.ones(k), size=k).T
        totals = rng.uniform(0.0, 100.0, size=k)
        est = estimate_marginals(c, totals)
        assert np.all(est.marginals.mass >= 0.0)
        assert est.marginals.total == pytest.approx(totals.sum(), rel=1e-12)
