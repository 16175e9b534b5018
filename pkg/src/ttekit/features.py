"""Learned features: word skipgrams, feature time series, selection, values.

Every feature is keyed by (kind, surface). A feature's time series is
the multiset of actual-TTE hours of the training tweets that contain it
(one occurrence per tweet). Selection drops hapax features and, among
the rest, the features whose population standard deviation sits above
the (1 - q) nearest-rank quantile. Surviving features get the mean or
median of their series as value.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .corpus import LabeledTweet, tokenize
from .texpr import CompiledPatternSet, extract, tfeat_skipgrams


class FeatureKind(str, enum.Enum):
    TEMPORAL = "temporal"
    WORD = "word"


class Fn(str, enum.Enum):
    """Aggregation used for training values and per-tweet estimates."""

    MEAN = "mean"
    MEDIAN = "median"

    def __call__(self, values: Sequence[float]) -> float:
        if self is Fn.MEAN:
            return statistics.fmean(values)
        return statistics.median(values)


class FeatureKey(NamedTuple):
    kind: FeatureKind
    surface: str


FeatureTable = dict[FeatureKey, list[float]]


def tokenize_words(
    text: str, wordlist: frozenset[str] | set[str], stoplist: frozenset[str] | set[str]
) -> list[str]:
    """Tokens present in the wordlist and absent from the stoplist.

    Order and duplicates are preserved.
    """
    return [t for t in tokenize(text) if t in wordlist and t not in stoplist]


def word_skipgrams(words: Sequence[str], n: int) -> list[FeatureKey]:
    """All order-preserving subsequences of length 1..n, space-joined."""
    if not 1 <= n <= 7:
        raise ValueError("skipgram length must be in [1, 7]")
    keys: list[FeatureKey] = []
    for k in range(1, min(n, len(words)) + 1):
        for combo in itertools.combinations(range(len(words)), k):
            keys.append(
                FeatureKey(FeatureKind.WORD, " ".join(words[i] for i in combo))
            )
    return keys


def temporal_keys(text_tokens: Sequence[str], patterns: CompiledPatternSet, n: int) -> list[FeatureKey]:
    spans = extract(text_tokens, patterns)
    return [FeatureKey(FeatureKind.TEMPORAL, s) for s in tfeat_skipgrams(spans, n)]


def accumulate(
    training: Iterable[LabeledTweet],
    extractor: Callable[[LabeledTweet], Iterable[FeatureKey]],
) -> FeatureTable:
    """Feature time series over the training tweets.

    A feature occurring several times inside one tweet counts once for
    that tweet: one tweet contributes one timestamp.
    """
    table: FeatureTable = {}
    for lt in training:
        for key in dict.fromkeys(extractor(lt)):
            table.setdefault(key, []).append(lt.tte_hours)
    return table


def nearest_rank_quantile(sorted_values: Sequence[float], q: float) -> float:
    """The (1 - q) empirical quantile, nearest-rank, of an ascending list.

    Computed as rank n - floor(q*n) so exact decimal cutoffs are not
    disturbed by float noise.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty sequence")
    rank = n - int(math.floor(q * n + 1e-12))
    rank = min(max(rank, 1), n)
    return sorted_values[rank - 1]


def series_std(values: Sequence[float]) -> float:
    """Population standard deviation of a feature time series."""
    mean = statistics.fmean(values)
    return math.sqrt(statistics.fmean([(v - mean) ** 2 for v in values]))


def select(table: FeatureTable, quantile_cutoff: float) -> FeatureTable:
    """Drop hapax series, then the highest-deviation quantile.

    Series whose standard deviation is strictly greater than the
    (1 - quantile_cutoff) nearest-rank quantile of all survivors'
    standard deviations are removed; ties at the threshold are kept.
    """
    if not 0.0 <= quantile_cutoff < 1.0:
        raise ValueError("quantile cutoff must be in [0, 1)")
    non_hapax = {k: v for k, v in table.items() if len(v) > 1}
    if not non_hapax:
        return {}
    stds = {k: series_std(v) for k, v in non_hapax.items()}
    threshold = nearest_rank_quantile(sorted(stds.values()), quantile_cutoff)
    return {k: v for k, v in non_hapax.items() if stds[k] <= threshold}


def assign_value(series: Sequence[float], fn: Fn) -> float:
    if len(series) < 2:
        raise ValueError("cannot assign a value to an empty or hapax series")
    return fn(series)


@dataclass
class TrainedModel:
    """Selected features with assigned TTE values plus the configuration
    they were trained under."""

    values: dict[FeatureKey, float]
    support: dict[FeatureKey, int]
    training_function: Fn = Fn.MEDIAN
    estimation_function: Fn = Fn.MEDIAN
    quantile_cutoff_word: float = 0.20
    quantile_cutoff_temporal: float = 0.25
    feature_length: int = 2
    window_size: int = 15
    pipeline_config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        features = [
            {
                "kind": key.kind.value,
                "surface": key.surface,
                "value": self.values[key],
                "support_count": self.support.get(key, 0),
            }
            for key in sorted(self.values, key=lambda k: (k.kind.value, k.surface))
        ]
        return {
            "config": {
                "training_function": self.training_function.value,
                "estimation_function": self.estimation_function.value,
                "quantile_cutoff_word": self.quantile_cutoff_word,
                "quantile_cutoff_temporal": self.quantile_cutoff_temporal,
                "feature_length": self.feature_length,
                "window_size": self.window_size,
                "pipeline": self.pipeline_config,
            },
            "features": features,
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "TrainedModel":
        cfg = obj["config"]
        values: dict[FeatureKey, float] = {}
        support: dict[FeatureKey, int] = {}
        for row in obj["features"]:
            key = FeatureKey(FeatureKind(row["kind"]), row["surface"])
            values[key] = float(row["value"])
            support[key] = int(row["support_count"])
        return cls(
            values=values,
            support=support,
            training_function=Fn(cfg["training_function"]),
            estimation_function=Fn(cfg["estimation_function"]),
            quantile_cutoff_word=float(cfg["quantile_cutoff_word"]),
            quantile_cutoff_temporal=float(cfg["quantile_cutoff_temporal"]),
            feature_length=int(cfg["feature_length"]),
            window_size=int(cfg["window_size"]),
            pipeline_config=dict(cfg.get("pipeline", {})),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, ensure_ascii=False, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def train_model(
    training: Sequence[LabeledTweet],
    patterns: CompiledPatternSet,
    wordlist: frozenset[str] | set[str],
    stoplist: frozenset[str] | set[str],
    *,
    feature_length: int = 2,
    quantile_cutoff_word: float = 0.20,
    quantile_cutoff_temporal: float = 0.25,
    training_function: Fn = Fn.MEDIAN,
    estimation_function: Fn = Fn.MEDIAN,
    window_size: int = 15,
    pipeline_config: dict | None = None,
) -> TrainedModel:
    """Accumulate, select and value temporal and word features separately."""

    def tfeat_extractor(lt: LabeledTweet) -> list[FeatureKey]:
        return temporal_keys(tokenize(lt.tweet.text), patterns, feature_length)

    def wfeat_extractor(lt: LabeledTweet) -> list[FeatureKey]:
        return word_skipgrams(
            tokenize_words(lt.tweet.text, wordlist, stoplist), feature_length
        )

    temporal = select(accumulate(training, tfeat_extractor), quantile_cutoff_temporal)
    word = select(accumulate(training, wfeat_extractor), quantile_cutoff_word)
    values: dict[FeatureKey, float] = {}
    support: dict[FeatureKey, int] = {}
    for table in (temporal, word):
        for key, series in table.items():
            values[key] = assign_value(series, training_function)
            support[key] = len(series)
    return TrainedModel(
        values=values,
        support=support,
        training_function=training_function,
        estimation_function=estimation_function,
        quantile_cutoff_word=quantile_cutoff_word,
        quantile_cutoff_temporal=quantile_cutoff_temporal,
        feature_length=feature_length,
        window_size=window_size,
        pipeline_config=pipeline_config or {},
    )
