import math
import random
from datetime import timedelta

import numpy as np
import pytest

from ttekit.corpus import parse_timestamp
from ttekit.regressors import (
    FrameSequence,
    RegInstance,
    baseline_fit,
    build_frames,
    build_sequences,
    frame_frequencies,
    ig_weights,
    knn_predict,
    minute_shift_instances,
    ols_fit,
    prune,
    smooth,
    ts_knn_predict,
)

from conftest import make_event, make_labeled, make_tweet


def labeled_at(posted, text="een twee", tweet_id="t"):
    from ttekit.corpus import HashtagPosition, LabeledTweet

    start = parse_timestamp("2012-03-11T15:00:00+00:00")
    tweet = make_tweet(tweet_id, text, posted)
    tte = (start - tweet.posted_at).total_seconds() / 3600.0
    return LabeledTweet(tweet, tte, HashtagPosition.ABSENT)


class TestBuildFrames:
    def test_counts_summed_within_hour(self):
        tweets = [
            labeled_at("2012-03-11T10:05:00Z", "a b", "t1"),
            labeled_at("2012-03-11T10:25:00Z", "a", "t2"),
            labeled_at("2012-03-11T10:45:00Z", "c", "t3"),
        ]
        frames = build_frames(tweets, [make_event()])
        assert len(frames) == 1
        assert frames[0].counts == {"a": 2, "b": 1, "c": 1}
        assert frames[0].tweet_count == 3

    def test_two_hours_two_frames(self):
        tweets = [
            labeled_at("2012-03-11T10:05:00Z", "a", "t1"),
            labeled_at("2012-03-11T11:05:00Z", "b", "t2"),
        ]
        frames = build_frames(tweets, [make_event()])
        assert len(frames) == 2

    def test_empty_hour_retained_for_continuity(self):
        tweets = [
            labeled_at("2012-03-11T08:05:00Z", "a", "t1"),
            labeled_at("2012-03-11T10:05:00Z", "b", "t2"),
        ]
        frames = build_frames(tweets, [make_event()])
        assert len(frames) == 3
        assert frames[1].tweet_count == 0
        ends = [f.frame_end for f in frames]
        for a, b in zip(ends, ends[1:]):
            assert b - a == timedelta(hours=1)

    def test_tte_relative_to_frame_end(self):
        tweets = [labeled_at("2012-03-11T10:05:00Z", "a", "t1")]
        frames = build_frames(tweets, [make_event()])
        # frame [10:00, 11:00), start 15:00 -> 4.0h at frame end
        assert frames[0].tte_hours == pytest.approx(4.0)


class TestMinuteShiftInstances:
    def test_window_membership(self):
        tweets = [
            labeled_at("2012-03-11T10:00:00Z", "a", "t1"),
            labeled_at("2012-03-11T10:30:00Z", "b", "t2"),
        ]
        instances = minute_shift_instances(tweets)
        assert len(instances) == 2
        late = instances[1]
        assert late.features == {"a": 1, "b": 1}

    def test_single_tweet_single_instance(self):
        tweets = [labeled_at("2012-03-11T10:00:00Z", "a", "t1")]
        instances = minute_shift_instances(tweets)
        assert len(instances) == 1
        assert instances[0].features == {"a": 1}
        assert instances[0].tte_hours == pytest.approx(5.0)

    def test_ninety_minutes_apart_disjoint(self):
        tweets = [
            labeled_at("2012-03-11T10:00:00Z", "a", "t1"),
            labeled_at("2012-03-11T11:30:00Z", "b", "t2"),
        ]
        instances = minute_shift_instances(tweets)
        assert len(instances) == 2
        assert instances[0].features == {"a": 1}
        assert instances[1].features == {"b": 1}


class TestPrune:
    def _instances(self, count):
        return [RegInstance({"f": 1}, 1.0) for _ in range(count)]

    def test_below_threshold_dropped(self):
        pruned = prune(self._instances(499), 500)
        assert all("f" not in inst.features for inst in pruned)

    def test_exactly_at_threshold_kept(self):
        pruned = prune(self._instances(500), 500)
        assert all("f" in inst.features for inst in pruned)

    def test_zero_threshold_is_identity(self):
        instances = [RegInstance({"a": 2, "b": 1}, 3.0)]
        assert prune(instances, 0) == instances


class TestOls:
    def test_recovers_exact_linear_data(self):
        rng = random.Random(1)
        instances = [
            RegInstance({"x": (x := rng.randrange(0, 10))}, 2.0 * x + 3.0)
            for _ in range(20)
        ]
        model = ols_fit(instances)
        assert model.weights[0] == pytest.approx(2.0, abs=1e-9)
        assert model.intercept == pytest.approx(3.0, abs=1e-9)

    def test_constant_target(self):
        instances = [RegInstance({"x": i}, 5.5) for i in range(6)]
        model = ols_fit(instances)
        for i in range(6):
            assert model.predict({"x": i}) == pytest.approx(5.5, abs=1e-9)

    def test_two_point_line(self):
        instances = [RegInstance({"x": 0}, 1.0), RegInstance({"x": 1}, 2.0)]
        model = ols_fit(instances)
        assert model.weights[0] == pytest.approx(1.0, abs=1e-9)
        assert model.intercept == pytest.approx(1.0, abs=1e-9)

    def test_residual_orthogonal_to_columns(self):
        rng = random.Random(2)
        instances = [
            RegInstance(
                {"a": rng.randrange(5), "b": rng.randrange(5)}, rng.uniform(0, 50)
            )
            for _ in range(40)
        ]
        model = ols_fit(instances)
        x = np.array([[inst.features.get(f, 0) for f in model.feature_order] for inst in instances], float)
        y = np.array([inst.tte_hours for inst in instances])
        residual = y - (x @ model.weights + model.intercept)
        for j in range(x.shape[1]):
            assert abs(float(residual @ x[:, j])) < 1e-8

    def test_singular_design_survives(self):
        # duplicated feature columns make the Gram matrix singular
        instances = [RegInstance({"a": i, "b": i}, float(i)) for i in range(5)]
        model = ols_fit(instances)
        assert model.predict({"a": 3, "b": 3}) == pytest.approx(3.0, abs=1e-3)


class TestIgWeights:
    def test_perfect_predictor_gets_full_entropy(self):
        instances = [
            RegInstance({"f": 1}, 0.5),
            RegInstance({"f": 1}, 0.6),
            RegInstance({}, 1.5),
            RegInstance({}, 1.6),
        ]
        weights = ig_weights(instances)
        assert weights["f"] == pytest.approx(1.0)  # H(two even bins) = 1 bit

    def test_independent_feature_zero(self):
        instances = [
            RegInstance({"f": 1}, 0.5),
            RegInstance({}, 0.5),
            RegInstance({"f": 1}, 1.5),
            RegInstance({}, 1.5),
        ]
        assert ig_weights(instances)["f"] == pytest.approx(0.0, abs=1e-12)

    def test_four_instance_hand_computation(self):
        # bins {0,0,1,1}; feature present once in bin 0:
        # IG = 1 - 0.75 * H(1/3, 2/3)
        instances = [
            RegInstance({"f": 1}, 0.1),
            RegInstance({}, 0.2),
            RegInstance({}, 1.1),
            RegInstance({}, 1.2),
        ]
        h_cond = -(1 / 3) * math.log2(1 / 3) - (2 / 3) * math.log2(2 / 3)
        expected = 1.0 - 0.75 * h_cond
        assert ig_weights(instances)["f"] == pytest.approx(expected, abs=1e-12)


def brute_force_knn(query, instances, k, weights=None):
    """Exhaustive oracle for the overlap metric prediction."""
    q = {f for f, c in query.items() if c}

    def dist(inst):
        active = {f for f, c in inst.features.items() if c}
        total = 0.0
        for f in q | active:
            a, b = int(f in q), int(f in active)
            if a != b:
                total += 1.0 if weights is None else weights.get(f, 0.0)
        return total

    pairs = sorted(((dist(inst), inst.tte_hours) for inst in instances), key=lambda p: p[0])
    cutoff = pairs[min(k, len(pairs)) - 1][0]
    chosen = [tte for d, tte in pairs if d <= cutoff]
    return sum(chosen) / len(chosen)


class TestKnn:
    def _random_instances(self, rng, n, n_features=8):
        out = []
        for _ in range(n):
            feats = {f"f{j}": 1 for j in range(n_features) if rng.random() < 0.4}
            out.append(RegInstance(feats, rng.uniform(0, 192)))
        return out

    def test_identical_instance_k1(self):
        rng = random.Random(4)
        instances = self._random_instances(rng, 12)
        query = dict(instances[3].features)
        # make the target unique so no tie can blur the check
        unique = [
            inst
            for inst in instances
            if {f for f in inst.features} != {f for f in query}
        ] + [instances[3]]
        assert knn_predict(query, unique, 1) == pytest.approx(
            instances[3].tte_hours
        )

    def test_zero_zero_agreement_costs_nothing(self):
        instances = [
            RegInstance({"a": 1}, 10.0),
            RegInstance({"a": 1, "b": 0}, 20.0),  # explicit zero value
        ]
        # query shares "a"; "b" is zero on both sides for the first instance
        assert knn_predict({"a": 1, "b": 0}, instances, 1) == pytest.approx(15.0)

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(7)
        for _ in range(60):
            instances = self._random_instances(rng, rng.randrange(3, 40))
            query = {
                f"f{j}": 1 for j in range(8) if rng.random() < 0.4
            }
            k = rng.randrange(1, 6)
            weights = (
                {f"f{j}": rng.uniform(0, 2) for j in range(8)}
                if rng.random() < 0.5
                else None
            )
            assert knn_predict(query, instances, k, weights) == pytest.approx(
                brute_force_knn(query, instances, k, weights)
            )

    def test_fewer_than_k_uses_all(self):
        instances = [RegInstance({"a": 1}, 10.0), RegInstance({"b": 1}, 20.0)]
        assert knn_predict({"c": 1}, instances, 5) == pytest.approx(15.0)


class TestSmooth:
    def test_constant_preserved(self):
        assert smooth([3.0] * 6) == pytest.approx([3.0] * 6)

    def test_hand_arithmetic(self):
        out = smooth([0.0, 0.0, 7.0])
        assert out[2] == pytest.approx(4.0)  # 4*7/7
        assert out[0] == 0.0 and out[1] == 0.0

    def test_boundary_weights(self):
        out = smooth([6.0, 0.0])
        assert out[0] == pytest.approx(6.0)  # 4/4
        assert out[1] == pytest.approx(12.0 / 6.0)  # (4*0 + 2*6)/6

    def test_linearity(self):
        rng = random.Random(8)
        x = [rng.uniform(0, 1) for _ in range(12)]
        y = [rng.uniform(0, 1) for _ in range(12)]
        a, b = 2.5, -1.25
        combined = smooth([a * xi + b * yi for xi, yi in zip(x, y)])
        parts = [a * sx + b * sy for sx, sy in zip(smooth(x), smooth(y))]
        assert combined == pytest.approx(parts, abs=1e-12)

    def test_range_preserved(self):
        rng = random.Random(9)
        x = [rng.uniform(0, 1) for _ in range(20)]
        out = smooth(x)
        assert all(0.0 <= v <= 1.0 for v in out)


def brute_force_ts_nn(query, training, k=1):
    dists = [(float(np.sum((query - t.vector) ** 2)), t.tte_hours) for t in training]
    dists.sort(key=lambda p: p[0])
    cutoff = dists[min(k, len(dists)) - 1][0]
    chosen = [tte for d, tte in dists if d <= cutoff]
    return sum(chosen) / len(chosen)


class TestTsKnn:
    def _seq(self, vector, tte, event="e"):
        return FrameSequence(event, np.array(vector, dtype=float), tte)

    def test_identical_sequence(self):
        training = [
            self._seq([0.1, 0.2, 0.3], 10.0),
            self._seq([0.9, 0.8, 0.7], 50.0),
        ]
        assert ts_knn_predict(training[1], training, 1) == 50.0

    def test_equidistant_ties_average(self):
        training = [
            self._seq([1.0, 0.0], 10.0),
            self._seq([-1.0, 0.0], 20.0),
        ]
        query = np.array([0.0, 0.0])
        assert ts_knn_predict(query, training, 1) == pytest.approx(15.0)

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(10)
        for _ in range(40):
            training = [
                self._seq([rng.uniform(0, 1) for _ in range(6)], rng.uniform(0, 192))
                for _ in range(rng.randrange(2, 12))
            ]
            query = np.array([rng.uniform(0, 1) for _ in range(6)])
            assert ts_knn_predict(query, training, 1) == pytest.approx(
                brute_force_ts_nn(query, training, 1)
            )

    def test_empty_training_rejected(self):
        with pytest.raises(ValueError):
            ts_knn_predict(np.zeros(3), [], 1)


class TestBuildSequences:
    def test_window_count_and_frequencies(self):
        tweets = [
            labeled_at("2012-03-11T08:10:00Z", "bal bal", "t1"),
            labeled_at("2012-03-11T09:10:00Z", "bal", "t2"),
            labeled_at("2012-03-11T10:10:00Z", "net", "t3"),
            labeled_at("2012-03-11T11:10:00Z", "bal net", "t4"),
        ]
        frames = build_frames(tweets, [make_event()])
        vocab = ["bal", "net"]
        freq = frame_frequencies(frames, vocab)
        assert freq[0, 0] == pytest.approx(2.0)  # 2 occurrences / 1 tweet
        sequences = build_sequences(frames, 2, vocab)
        assert len(sequences) == 3  # 4 frames, window 2
        assert sequences[-1].tte_hours == frames[-1].tte_hours


class TestBaseline:
    def test_hand_arithmetic(self):
        tweets = [make_labeled(v, tweet_id=str(v)) for v in (1.0, 2.0, 10.0)]
        baseline = baseline_fit(tweets)
        assert baseline.mean_hours == pytest.approx(13.0 / 3.0)
        assert baseline.median_hours == pytest.approx(2.0)

    def test_single_tweet(self):
        baseline = baseline_fit([make_labeled(7.5)])
        assert baseline.mean_hours == baseline.median_hours == 7.5

    def test_skewed_set_median_below_mean(self):
        # two thirds of the mass below 8h, long tail above
        rng = random.Random(12)
        ttes = [rng.uniform(0, 8) for _ in range(66)] + [
            rng.uniform(8, 192) for _ in range(34)
        ]
        tweets = [make_labeled(t, tweet_id=str(i)) for i, t in enumerate(ttes)]
        baseline = baseline_fit(tweets)
        assert baseline.median_hours < baseline.mean_hours
