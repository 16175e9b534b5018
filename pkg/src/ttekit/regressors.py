"""Bag-of-words regression baselines over hourly tweet aggregates.

Covers ordinary least squares on word counts, k-NN local regression
with information-gain feature weighting and an overlap metric that
skips features absent on both sides, a nearest-neighbor search over
sequences of smoothed hourly word frequencies, and the constant
mean/median baselines.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Mapping, Sequence

import numpy as np

from .corpus import Event, LabeledTweet, tokenize

SMOOTH_WEIGHTS = (4.0, 2.0, 1.0)  # weights at t, t-1, t-2


@dataclass(frozen=True)
class HourFrame:
    event_id: str
    frame_end: datetime  # end of the clock hour
    counts: Mapping[str, int]
    tweet_count: int
    tte_hours: float  # frame_end relative to event start


@dataclass(frozen=True)
class RegInstance:
    features: Mapping[str, int]
    tte_hours: float


@dataclass(frozen=True)
class FrameSequence:
    event_id: str
    vector: np.ndarray  # flattened (length x vocab) smoothed frequencies
    tte_hours: float  # of the last frame in the window


@dataclass(frozen=True)
class ConstantBaseline:
    mean_hours: float
    median_hours: float


def build_frames(
    tweets: Sequence[LabeledTweet], events: Sequence[Event]
) -> list[HourFrame]:
    """Aggregate tweets into contiguous clock-hour frames per event.

    Hours without tweets are kept (empty counts) so frame sequences stay
    contiguous.
    """
    by_event = {ev.event_id: ev for ev in events}
    grouped: dict[str, list[LabeledTweet]] = {}
    for lt in tweets:
        grouped.setdefault(lt.tweet.event_id, []).append(lt)
    frames: list[HourFrame] = []
    for event_id in grouped:
        ev = by_event[event_id]
        items = sorted(grouped[event_id], key=lambda lt: lt.tweet.posted_at)
        first = items[0].tweet.posted_at.replace(minute=0, second=0, microsecond=0)
        last = items[-1].tweet.posted_at.replace(minute=0, second=0, microsecond=0)
        n_frames = int((last - first).total_seconds() // 3600) + 1
        counters = [Counter() for _ in range(n_frames)]
        totals = [0] * n_frames
        for lt in items:
            idx = int((lt.tweet.posted_at - first).total_seconds() // 3600)
            counters[idx].update(tokenize(lt.tweet.text))
            totals[idx] += 1
        for i in range(n_frames):
            frame_end = first + timedelta(hours=i + 1)
            frames.append(
                HourFrame(
                    event_id=event_id,
                    frame_end=frame_end,
                    counts=dict(counters[i]),
                    tweet_count=totals[i],
                    tte_hours=(ev.start_time - frame_end).total_seconds() / 3600.0,
                )
            )
    return frames


def minute_shift_instances(tweets: Sequence[LabeledTweet]) -> list[RegInstance]:
    """Overlapping one-hour instances shifted per minute.

    For every minute mark holding at least one tweet, the instance
    aggregates all tweets of the 60 minute slots ending at that mark;
    its TTE is measured at the mark.
    """
    items = sorted(tweets, key=lambda lt: lt.tweet.posted_at)
    minute_of = {
        lt.tweet.id: lt.tweet.posted_at.replace(second=0, microsecond=0)
        for lt in items
    }
    marks = list(dict.fromkeys(minute_of[lt.tweet.id] for lt in items))
    instances: list[RegInstance] = []
    for mark in marks:
        window_start = mark - timedelta(minutes=60)
        counts: Counter = Counter()
        tte: float | None = None
        for lt in items:
            minute = minute_of[lt.tweet.id]
            if window_start < minute <= mark:
                counts.update(tokenize(lt.tweet.text))
            if tte is None and minute == mark:
                # TTE measured at the mark, recovered from a tweet in that minute
                tte = lt.tte_hours + (lt.tweet.posted_at - mark).total_seconds() / 3600.0
        instances.append(RegInstance(dict(counts), float(tte)))
    return instances


def prune(instances: Sequence[RegInstance], min_count: int) -> list[RegInstance]:
    """Drop features whose total occurrence count is below min_count."""
    if min_count < 0:
        raise ValueError("min_count must be >= 0")
    totals: Counter = Counter()
    for inst in instances:
        totals.update(inst.features)
    keep = {f for f, c in totals.items() if c >= min_count}
    return [
        RegInstance({f: c for f, c in inst.features.items() if f in keep}, inst.tte_hours)
        for inst in instances
    ]


@dataclass
class OlsModel:
    feature_order: list[str]
    weights: np.ndarray  # per feature
    intercept: float

    def predict(self, features: Mapping[str, int]) -> float:
        x = np.array([features.get(f, 0) for f in self.feature_order], dtype=float)
        return float(x @ self.weights + self.intercept)


def ols_fit(instances: Sequence[RegInstance]) -> OlsModel:
    """Least squares on count features via the normal equations.

    A singular Gram matrix gets a tiny ridge term (1e-8) instead of
    failing.
    """
    order = sorted({f for inst in instances for f in inst.features})
    x = np.array(
        [[inst.features.get(f, 0) for f in order] for inst in instances], dtype=float
    )
    design = np.hstack([x, np.ones((len(instances), 1))])
    y = np.array([inst.tte_hours for inst in instances], dtype=float)
    gram = design.T @ design
    rhs = design.T @ y
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        gram = gram + 1e-8 * np.eye(gram.shape[0])
    beta = np.linalg.solve(gram, rhs)
    return OlsModel(order, beta[:-1], float(beta[-1]))


def _entropy(labels: Sequence[int]) -> float:
    total = len(labels)
    if total == 0:
        return 0.0
    counts = Counter(labels)
    return -sum((c / total) * math.log2(c / total) for c in counts.values())


def ig_weights(instances: Sequence[RegInstance]) -> dict[str, float]:
    """Information gain of each binary feature against whole-hour TTE bins."""
    bins = [int(math.floor(inst.tte_hours)) for inst in instances]
    base = _entropy(bins)
    features = {f for inst in instances for f in inst.features}
    weights: dict[str, float] = {}
    total = len(instances)
    for f in features:
        present = [b for inst, b in zip(instances, bins) if f in inst.features]
        absent = [b for inst, b in zip(instances, bins) if f not in inst.features]
        conditional = (len(present) / total) * _entropy(present) + (
            len(absent) / total
        ) * _entropy(absent)
        weights[f] = base - conditional
    return weights


def knn_predict(
    query: Mapping[str, int],
    instances: Sequence[RegInstance],
    k: int,
    weights: Mapping[str, float] | None = None,
) -> float:
    """Mean TTE of the k nearest instances under the weighted overlap metric.

    Distance sums the weight of every feature present on exactly one
    side (matches on absent features cost nothing). All instances tied
    at the k-th distance are included.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not instances:
        raise ValueError("no training instances")
    q_active = {f for f, c in query.items() if c}

    def weight(f: str) -> float:
        if weights is None:
            return 1.0
        return weights.get(f, 0.0)

    dists = []
    for inst in instances:
        active = {f for f, c in inst.features.items() if c}
        dists.append(sum(weight(f) for f in q_active.symmetric_difference(active)))
    order = sorted(range(len(instances)), key=lambda i: dists[i])
    cutoff = dists[order[min(k, len(instances)) - 1]]
    chosen = [instances[i].tte_hours for i in order if dists[i] <= cutoff]
    return float(np.mean(chosen))


def smooth(series: Sequence[float]) -> list[float]:
    """Pseudo-exponential moving average with weights 4, 2, 1 at t, t-1,
    t-2; missing history renormalizes over the available weights."""
    out: list[float] = []
    for t in range(len(series)):
        num = 0.0
        den = 0.0
        for lag, w in enumerate(SMOOTH_WEIGHTS):
            if t - lag >= 0:
                num += w * series[t - lag]
                den += w
        out.append(num / den)
    return out


def frame_frequencies(
    frames: Sequence[HourFrame], vocab: Sequence[str]
) -> np.ndarray:
    """Per-frame relative word frequencies (count / tweets in frame)."""
    freq = np.zeros((len(frames), len(vocab)))
    index = {w: i for i, w in enumerate(vocab)}
    for t, frame in enumerate(frames):
        if frame.tweet_count:
            for word, count in frame.counts.items():
                i = index.get(word)
                if i is not None:
                    freq[t, i] = count / frame.tweet_count
    return freq


def build_sequences(
    frames: Sequence[HourFrame], length: int, vocab: Sequence[str]
) -> list[FrameSequence]:
    """Sliding windows of ``length`` consecutive smoothed frames.

    Smoothing runs over each event's full frame series before windowing.
    """
    by_event: dict[str, list[HourFrame]] = {}
    for frame in frames:
        by_event.setdefault(frame.event_id, []).append(frame)
    sequences: list[FrameSequence] = []
    for event_id, items in by_event.items():
        items.sort(key=lambda f: f.frame_end)
        freq = frame_frequencies(items, vocab)
        smoothed = np.column_stack(
            [smooth(freq[:, j]) for j in range(freq.shape[1])]
        ) if freq.size else freq
        for start in range(0, len(items) - length + 1):
            window = smoothed[start : start + length]
            sequences.append(
                FrameSequence(
                    event_id=event_id,
                    vector=window.reshape(-1).copy(),
                    tte_hours=items[start + length - 1].tte_hours,
                )
            )
    return sequences


def ts_knn_predict(
    query: FrameSequence | np.ndarray,
    training: Sequence[FrameSequence],
    k: int = 1,
) -> float:
    """TTE of the nearest training sequence by Euclidean distance.

    Exactly equidistant nearest neighbors are averaged; with k > 1 the
    k nearest (plus distance ties) are averaged.
    """
    if not training:
        raise ValueError("no training sequences")
    vec = query.vector if isinstance(query, FrameSequence) else np.asarray(query)
    dists = [float(np.sum((vec - t.vector) ** 2)) for t in training]
    order = sorted(range(len(training)), key=lambda i: dists[i])
    cutoff = dists[order[min(k, len(training)) - 1]]
    chosen = [training[i].tte_hours for i in order if dists[i] <= cutoff]
    return float(np.mean(chosen))


def baseline_fit(training: Sequence[LabeledTweet]) -> ConstantBaseline:
    """Mean and median TTE over the training tweets."""
    if not training:
        raise ValueError("no training tweets")
    ttes = np.array([lt.tte_hours for lt in training])
    return ConstantBaseline(float(np.mean(ttes)), float(np.median(ttes)))
