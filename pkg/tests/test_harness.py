import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darp.errors import InvalidInput, MissingClass
from darp.harness import (
    SyntheticScenario,
    balanced_accuracy,
    class_counts,
    evaluate_summary,
    generate_biased_pseudolabels,
    geometric_mean_score,
    imbalance_ratio,
    read_scenario_file,
    scenario_from_mapping,
)
from darp.types import ImbalanceProfile


def _oracle_counts(head, ratio, k):
    mpmath.mp.dps = 50
    return [int(mpmath.floor(head * mpmath.mpf(ratio) ** (-mpmath.mpf(i) / (k - 1)))) for i in range(k)]


class TestClassCounts:
    def test_tail_is_head_over_ratio(self):
        counts = class_counts(ImbalanceProfile(1500, 150, 10))
        assert counts[0] == 1500
        assert counts[-1] == 10

    def test_second_class(self):
        counts = class_counts(ImbalanceProfile(1500, 150, 10))
        assert counts[1] == 859
        assert counts[1] == _oracle_counts(1500, 150, 10)[1]

    @pytest.mark.parametrize("head, ratio, k", [(1500, 150, 10), (1500, 100, 10), (1000, 100, 10), (500, 50, 7)])
    def test_matches_extended_precision(self, head, ratio, k):
        np.testing.assert_array_equal(class_counts(ImbalanceProfile(head, ratio, k)), _oracle_counts(head, ratio, k))

    def test_ratio_one_is_uniform(self):
        np.testing.assert_array_equal(class_counts(ImbalanceProfile(1000, 1.0, 10)), 1000)

    def test_reversed(self):
        fwd = class_counts(ImbalanceProfile(1500, 100, 10))
        rev = class_counts(ImbalanceProfile(1500, 100, 10, reversed=True))
        np.testing.assert_array_equal(rev, fwd[::-1])
        assert np.all(np.diff(fwd) <= 0)


class TestGenerator:
    def _scenario(self, **kw):
        values = {"labeled_head": 150, "unlabeled_head": 100}
        values.update(kw)
        return scenario_from_mapping(values)

    def test_deterministic(self):
        a = generate_biased_pseudolabels(self._scenario(seed=42))
        b = generate_biased_pseudolabels(self._scenario(seed=42))
        for x, y in zip(a, b):
            assert x.tobytes() == y.tobytes()
        c = generate_biased_pseudolabels(self._scenario(seed=43))
        assert a[0].tobytes() != c[0].tobytes()

    def test_one_hot_limit(self):
        probs, truth, counts = generate_biased_pseudolabels(self._scenario(bias_strength=0, noise_temp=1e-4))
        assert np.array_equal(probs.argmax(axis=1), truth)
        assert np.all(probs.max(axis=1) == 1.0)
        np.testing.assert_array_equal(np.bincount(truth, minlength=10), counts)

    def test_rows_are_stochastic(self):
        probs, _, _ = generate_biased_pseudolabels(self._scenario())
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_bias_inflates_argmax_imbalance(self):
        # defaults: labeled ratio 100, balanced unlabeled set of 10000
        probs, truth, _ = generate_biased_pseudolabels(scenario_from_mapping({}))
        assert probs.shape == (10000, 10)
        assert imbalance_ratio(np.bincount(truth, minlength=10)) == 1.0
        argmax_counts = np.bincount(probs.argmax(axis=1), minlength=10)
        # measured on this seed: the tail classes are never predicted
        assert argmax_counts[0] == 7131
        assert imbalance_ratio(argmax_counts) == math.inf

    def test_scenario_file(self, tmp_path):
        path = tmp_path / "s.cfg"
        path.write_text("# comment\nseed = 7\nunlabeled_reversed = true\n\n")
        sc = scenario_from_mapping(read_scenario_file(str(path)))
        assert sc.seed == 7 and sc.profile_unlabeled.reversed
        path.write_text("oops\n")
        with pytest.raises(InvalidInput, match=":1:"):
            read_scenario_file(str(path))

    def test_scenario_validation(self):
        with pytest.raises(InvalidInput):
            scenario_from_mapping({"colour": "red"})
        with pytest.raises(InvalidInput):
            scenario_from_mapping({"seed": "x"})
        with pytest.raises(InvalidInput):
            SyntheticScenario(ImbalanceProfile(10, 2, 3), ImbalanceProfile(10, 2, 4))


class TestMetrics:
    truth = [0, 0, 1, 1, 1, 1]
    pred = [0, 0, 1, 0, 0, 0]

    def test_perfect(self):
        assert balanced_accuracy(self.truth, self.truth, 2) == 1.0
        assert geometric_mean_score(self.truth, self.truth, 2) == 1.0

    def test_constructed_instance(self):
        # recalls (1.0, 0.25)
        assert balanced_accuracy(self.pred, self.truth, 2) == 0.625
        assert geometric_mean_score(self.pred, self.truth, 2) == 0.5

    def test_single_class_predictions(self):
        assert balanced_accuracy([0, 0, 0, 0], [0, 0, 1, 1], 2) == 0.5
        assert geometric_mean_score([0, 0, 0, 0], [0, 0, 1, 1], 2) == 0.0

    def test_missing_true_class(self):
        with pytest.raises(MissingClass):
            balanced_accuracy([0, 1], [0, 0], 2)

    def test_summary(self):
        s = evaluate_summary(self.pred, self.truth, 2)
        assert s["bACC"] == 0.625 and s["GM"] == 0.5
        # one-hot totals (5, 1) against true counts (2, 4)
        assert s["mismatch"] == pytest.approx(1.0)
        assert s["imbalance_ratio_pred"] == 5.0
        assert s["imbalance_ratio_truth"] == 2.0
        assert evaluate_summary([0, 0], [0, 1], 2)["imbalance_ratio_pred"] is None

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 8))
    def test_gm_never_exceeds_bacc(self, seed, k):
        rng = np.random.default_rng(seed)
        truth = np.concatenate([np.arange(k), rng.integers(0, k, size=40)])
        pred = np.where(rng.uniform(size=truth.size) < 0.6, truth, rng.integers(0, k, size=truth.size))
        assert geometric_mean_score(pred, truth, k) <= balanced_accuracy(pred, truth, k) + 1e-15
