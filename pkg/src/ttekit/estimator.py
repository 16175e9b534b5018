"""Per-tweet TTE estimation: three candidate estimates, priority
combination, and a priority-aware history window.

Candidates come from estimation rules, learned temporal-expression
values, and learned word-skipgram values, in that order of precedence.
The history window medianizes the current raw estimate with the W-1
most recent visible raw estimates of the same event; rule estimates only
see rule history, temporal estimates see rule and temporal history, and
word estimates see everything.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import LabeledTweet, tokenize
from .features import FeatureKey, FeatureKind, Fn, TrainedModel, word_skipgrams
from .rules import RuleSet
from .texpr import CompiledPatternSet, ExprSpan, extract, tfeat_skipgrams


class Source(str, enum.Enum):
    RULE = "rule"
    TEMPORAL = "temporal"
    WORD = "word"
    NONE = "none"


ALL_SOURCES = frozenset({Source.RULE, Source.TEMPORAL, Source.WORD})

# which history entries each source may see
_VISIBLE = {
    Source.RULE: frozenset({Source.RULE}),
    Source.TEMPORAL: frozenset({Source.RULE, Source.TEMPORAL}),
    Source.WORD: ALL_SOURCES,
}


@dataclass(frozen=True)
class Estimate:
    tweet_id: str
    source: Source
    raw_hours: float | None
    final_hours: float | None
    actual_hours: float
    event_id: str = ""

    @property
    def estimated(self) -> bool:
        return self.source is not Source.NONE

    def to_json_dict(self) -> dict:
        error = None
        if self.final_hours is not None:
            error = self.actual_hours - self.final_hours
        return {
            "tweet_id": self.tweet_id,
            "source": self.source.value,
            "raw": self.raw_hours,
            "final": self.final_hours,
            "actual": self.actual_hours,
            "error": error,
        }


@dataclass
class HistoryBuffer:
    """Chronological (source, raw estimate) pairs for one event."""

    entries: list[tuple[Source, float]] = field(default_factory=list)

    def append(self, source: Source, raw: float) -> None:
        self.entries.append((source, raw))

    def visible(self, source: Source) -> list[float]:
        allowed = _VISIBLE[source]
        return [raw for src, raw in self.entries if src in allowed]


def estimate_features(
    keys: Iterable[FeatureKey], model: TrainedModel, fn: Fn
) -> float | None:
    """Aggregate the model values of the tweet's matched keys, or None."""
    matched = [model.values[k] for k in keys if k in model.values]
    if not matched:
        return None
    return fn(matched)


def combine(
    rule: float | None, temporal: float | None, word: float | None
) -> tuple[Source, float | None]:
    """First present candidate wins, in order RULE, TEMPORAL, WORD."""
    if rule is not None:
        return Source.RULE, rule
    if temporal is not None:
        return Source.TEMPORAL, temporal
    if word is not None:
        return Source.WORD, word
    return Source.NONE, None


def apply_history(
    buffer: HistoryBuffer, source: Source, raw: float, window_size: int
) -> float:
    """Median of the current raw and the last W-1 visible raw estimates.

    W <= 1 or an empty visible history leaves the raw value unchanged.
    """
    if window_size <= 1:
        return raw
    visible = buffer.visible(source)
    if not visible:
        return raw
    window = visible[-(window_size - 1) :]
    window.append(raw)
    return statistics.median(window)


@dataclass(frozen=True)
class TweetFeatures:
    """Everything estimation needs from one tweet, extracted once."""

    spans: tuple[ExprSpan, ...]
    rule_hours: float | None
    tfeats: tuple[FeatureKey, ...]
    wfeats: tuple[FeatureKey, ...]


def extract_features(
    lt: LabeledTweet,
    patterns: CompiledPatternSet,
    rules: RuleSet | None,
    wordlist: frozenset[str] | set[str],
    stoplist: frozenset[str] | set[str],
    feature_length: int = 2,
    clamp_nonnegative: bool = True,
) -> TweetFeatures:
    tokens = tokenize(lt.tweet.text)
    spans = extract(tokens, patterns)
    rule_hours = None
    if rules is not None and spans:
        hit = rules.rule_estimate(spans, lt.tweet.posted_at, clamp_nonnegative)
        if hit is not None:
            rule_hours = hit[0]
    tfeats = [
        FeatureKey(FeatureKind.TEMPORAL, s) for s in tfeat_skipgrams(spans, feature_length)
    ]
    words = [t for t in tokens if t in wordlist and t not in stoplist]
    wfeats = word_skipgrams(words, feature_length)
    return TweetFeatures(tuple(spans), rule_hours, tuple(tfeats), tuple(wfeats))


def candidates(
    feats: TweetFeatures,
    model: TrainedModel,
    enabled: frozenset[Source] = ALL_SOURCES,
) -> tuple[float | None, float | None, float | None]:
    """(rule, temporal, word) candidate estimates for one tweet."""
    fn = model.estimation_function
    rule = feats.rule_hours if Source.RULE in enabled else None
    temporal = (
        estimate_features(feats.tfeats, model, fn)
        if Source.TEMPORAL in enabled
        else None
    )
    word = (
        estimate_features(feats.wfeats, model, fn) if Source.WORD in enabled else None
    )
    return rule, temporal, word


def estimate_stream(
    tweets: Sequence[LabeledTweet],
    patterns: CompiledPatternSet,
    rules: RuleSet | None,
    model: TrainedModel,
    *,
    wordlist: frozenset[str] | set[str] = frozenset(),
    stoplist: frozenset[str] | set[str] = frozenset(),
    window_size: int | None = None,
    clamp_nonnegative: bool = True,
    enabled: frozenset[Source] = ALL_SOURCES,
    features: Sequence[TweetFeatures] | None = None,
) -> list[Estimate]:
    """Estimate one event's tweets in chronological order.

    For each tweet: extract, form the three candidates, combine by
    priority, adjust with the history window, then append the raw
    estimate to the event history. Tweets without any estimate do not
    enter the history. Pass precomputed ``features`` to skip extraction.
    """
    window = model.window_size if window_size is None else window_size
    buffer = HistoryBuffer()
    out: list[Estimate] = []
    for i, lt in enumerate(tweets):
        feats = (
            features[i]
            if features is not None
            else extract_features(
                lt,
                patterns,
                rules,
                wordlist,
                stoplist,
                model.feature_length,
                clamp_nonnegative,
            )
        )
        source, raw = combine(*candidates(feats, model, enabled))
        if raw is None:
            out.append(
                Estimate(lt.tweet.id, Source.NONE, None, None, lt.tte_hours, lt.tweet.event_id)
            )
            continue
        final = apply_history(buffer, source, raw, window)
        buffer.append(source, raw)
        out.append(
            Estimate(lt.tweet.id, source, raw, final, lt.tte_hours, lt.tweet.event_id)
        )
    return out
