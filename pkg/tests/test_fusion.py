"""Distance-matrix fusion schemes and score normalization."""

import numpy as np
import pytest

from facebench.fusion import (
    FusionKind,
    FusionScheme,
    fuse,
    minmax_normalize,
    rank_metrics,
    wmp_weights,
)
from facebench.metrics import DistanceMatrix, MetricKind


def dm(values, metric=MetricKind.EUC, probe_ids=None, gallery_ids=None):
    return DistanceMatrix(
        values=np.asarray(values, dtype=float),
        metric=metric,
        probe_ids=probe_ids,
        gallery_ids=gallery_ids,
    )


class TestMinMax:
    def test_fixed_example(self):
        out = minmax_normalize(dm([[1.0, 3.0], [2.0, 5.0]]))
        np.testing.assert_allclose(out.values, [[0.0, 0.5], [0.25, 1.0]])

    def test_endpoints_map_to_zero_and_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            vals = rng.uniform(0, 50, size=(4, 6))
            out = minmax_normalize(dm(vals)).values
            assert out.min() == 0.0
            assert out.max() == 1.0

    def test_constant_matrix_becomes_zero(self):
        out = minmax_normalize(dm(np.full((3, 3), 7.0)))
        np.testing.assert_array_equal(out.values, np.zeros((3, 3)))

    def test_order_preserved(self):
        rng = np.random.default_rng(1)
        vals = rng.uniform(0, 9, size=(5, 5))
        out = minmax_normalize(dm(vals)).values
        assert np.array_equal(np.argsort(vals, axis=1), np.argsort(out, axis=1))

    def test_ids_carried_through(self):
        out = minmax_normalize(
            dm([[1.0, 2.0]], probe_ids=("p",), gallery_ids=("a", "b"))
        )
        assert out.probe_ids == ("p",)
        assert out.gallery_ids == ("a", "b")


class TestWmpWeights:
    def test_published_two_distance_example(self):
        w = wmp_weights(np.array([0.1, 0.5]))
        assert round(float(w[0]), 4) == 0.5987
        assert round(float(w[1]), 4) == 0.4013

    def test_sum_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            d = rng.uniform(0, 1, size=rng.integers(2, 6))
            assert abs(wmp_weights(d).sum() - 1.0) <= 1e-12

    def test_all_positive(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = rng.uniform(0, 1, size=4)
            assert np.all(wmp_weights(d) > 0)

    def test_smaller_distance_gets_larger_weight(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            d = rng.uniform(0, 1, size=5)
            w = wmp_weights(d)
            order = np.argsort(d)
            assert np.all(np.diff(w[order]) <= 1e-15)

    def test_equal_distances_equal_weights(self):
        w = wmp_weights(np.array([0.3, 0.3, 0.3]))
        np.testing.assert_allclose(w, 1 / 3, atol=1e-12)

    def test_single_distance(self):
        np.testing.assert_allclose(wmp_weights(np.array([0.4])), [1.0])


class TestSchemeType:
    def test_weighted_requires_weights(self):
        with pytest.raises(ValueError, match="weight"):
            FusionScheme(kind=FusionKind.WEIGHTED)

    def test_other_kinds_forbid_weights(self):
        with pytest.raises(ValueError):
            FusionScheme(kind=FusionKind.AVG, weights=(0.5, 0.5))

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            FusionScheme(kind=FusionKind.WEIGHTED, weights=(0.9, 0.2))

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            FusionScheme(kind=FusionKind.WEIGHTED, weights=(1.5, -0.5))

    def test_describe(self):
        assert FusionScheme(kind=FusionKind.AVG).describe() == "AVG"
        s = FusionScheme(kind=FusionKind.WEIGHTED, weights=(0.9, 0.1))
        assert s.describe() == "W(0.9,0.1)"


class TestFuse:
    def setup_method(self):
        rng = np.random.default_rng(5)
        self.mats = [
            dm(rng.uniform(0, 1, size=(6, 8)), metric=MetricKind(k))
            for k in (1, 2, 3)
        ]

    def test_avg_is_elementwise_mean(self):
        out = fuse(self.mats, FusionScheme(kind=FusionKind.AVG))
        want = np.mean([m.values for m in self.mats], axis=0)
        np.testing.assert_allclose(out.values, want, atol=1e-15)

    def test_min_is_elementwise_min(self):
        out = fuse(self.mats, FusionScheme(kind=FusionKind.MIN))
        want = np.min([m.values for m in self.mats], axis=0)
        np.testing.assert_array_equal(out.values, want)

    def test_median_two_inputs_equals_average(self):
        pair = self.mats[:2]
        med = fuse(pair, FusionScheme(kind=FusionKind.MED))
        avg = fuse(pair, FusionScheme(kind=FusionKind.AVG))
        np.testing.assert_array_equal(med.values, avg.values)

    def test_median_three_inputs_is_middle_value(self):
        out = fuse(self.mats, FusionScheme(kind=FusionKind.MED))
        want = np.median([m.values for m in self.mats], axis=0)
        np.testing.assert_array_equal(out.values, want)

    def test_weighted_identity_on_first_input(self):
        out = fuse(
            self.mats[:2], FusionScheme(kind=FusionKind.WEIGHTED, weights=(1.0, 0.0))
        )
        np.testing.assert_array_equal(out.values, self.mats[0].values)

    def test_weighted_matches_manual_combination(self):
        scheme = FusionScheme(kind=FusionKind.WEIGHTED, weights=(0.8, 0.1, 0.1))
        out = fuse(self.mats, scheme)
        want = sum(w * m.values for w, m in zip(scheme.weights, self.mats))
        np.testing.assert_allclose(out.values, want, atol=1e-15)

    def test_weighted_length_must_match(self):
        scheme = FusionScheme(kind=FusionKind.WEIGHTED, weights=(0.5, 0.5))
        with pytest.raises(ValueError, match="3 matrices"):
            fuse(self.mats, scheme)

    def test_wmp_matches_per_cell_oracle(self):
        out = fuse(self.mats, FusionScheme(kind=FusionKind.WMP))
        stack = np.array([m.values for m in self.mats])
        for i in range(stack.shape[1]):
            for j in range(stack.shape[2]):
                d = stack[:, i, j]
                want = float(wmp_weights(d) @ d)
                assert out.values[i, j] == pytest.approx(want, rel=1e-12)

    def test_wmp_between_min_and_avg(self):
        out = fuse(self.mats, FusionScheme(kind=FusionKind.WMP))
        lo = np.min([m.values for m in self.mats], axis=0)
        hi = np.mean([m.values for m in self.mats], axis=0)
        assert np.all(out.values >= lo - 1e-12)
        assert np.all(out.values <= hi + 1e-12)

    def test_single_matrix_identity_for_all_schemes(self):
        one = self.mats[:1]
        for kind in (FusionKind.AVG, FusionKind.MIN, FusionKind.MED, FusionKind.WMP):
            out = fuse(one, FusionScheme(kind=kind))
            np.testing.assert_allclose(out.values, one[0].values, atol=1e-12)
        out = fuse(one, FusionScheme(kind=FusionKind.WEIGHTED, weights=(1.0,)))
        np.testing.assert_array_equal(out.values, one[0].values)

    def test_metric_descriptor_names_constituents(self):
        out = fuse(self.mats[:2], FusionScheme(kind=FusionKind.AVG))
        assert out.metric == "AVG[EUC,CB]"

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fuse([], FusionScheme(kind=FusionKind.AVG))

    def test_shape_mismatch_rejected(self):
        bad = [dm(np.zeros((2, 3))), dm(np.zeros((2, 4)))]
        with pytest.raises(ValueError, match="shape"):
            fuse(bad, FusionScheme(kind=FusionKind.AVG))

    def test_id_mismatch_rejected(self):
        a = dm([[0.0, 1.0]], probe_ids=("p",), gallery_ids=("g1", "g2"))
        b = dm([[0.0, 1.0]], probe_ids=("q",), gallery_ids=("g1", "g2"))
        with pytest.raises(ValueError, match="probe"):
            fuse([a, b], FusionScheme(kind=FusionKind.AVG))

    def test_ids_propagate(self):
        a = dm([[0.0, 1.0]], probe_ids=("p",), gallery_ids=("g1", "g2"))
        b = dm([[1.0, 0.0]], probe_ids=("p",), gallery_ids=("g1", "g2"))
        out = fuse([a, b], FusionScheme(kind=FusionKind.MIN))
        assert out.probe_ids == ("p",)
        assert out.gallery_ids == ("g1", "g2")


class TestRankMetrics:
    def test_sorted_by_accuracy_descending(self):
        acc = {MetricKind.EUC: 80.0, MetricKind.COS: 95.0, MetricKind.CB: 90.0}
        ranked = rank_metrics(acc)
        assert ranked == [MetricKind.COS, MetricKind.CB, MetricKind.EUC]

    def test_ties_broken_by_metric_number(self):
        acc = {MetricKind.CHEB: 88.0, MetricKind.EUC: 88.0, MetricKind.COS: 88.0}
        ranked = rank_metrics(acc)
        assert ranked == [MetricKind.EUC, MetricKind.COS, MetricKind.CHEB]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            rank_metrics({})
