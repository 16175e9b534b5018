"""Leave-one-event-out evaluation, error metrics, and diagnostics.

Each fold trains on every event but one and estimates the held-out
event's tweets. Four estimation passes run per fold — rules only,
temporal features only, word features only, and the priority
combination — so the summary columns match runs of the single feature
families. Metrics are computed over estimated tweets; coverage reports
the rest. Constant mean/median baselines are evaluated over all tweets.

Fold training is vectorized: feature occurrences are interned once into
flat arrays and each fold's series statistics are derived by masking
out the held-out event. The result is identical to the per-dict
training path in :mod:`ttekit.features`, which the tests cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Event, LabeledTweet, group_by_event
from .estimator import (
    ALL_SOURCES,
    Estimate,
    HistoryBuffer,
    Source,
    apply_history,
    combine,
    extract_features,
)
from .features import FeatureKind, Fn, nearest_rank_quantile

PASSES: dict[str, frozenset[Source]] = {
    "rule": frozenset({Source.RULE}),
    "temporal": frozenset({Source.TEMPORAL}),
    "word": frozenset({Source.WORD}),
    "all": ALL_SOURCES,
}

RANGE_BINS: tuple[tuple[str, int, int | None], ...] = (
    ("0", 0, 0),
    ("1-4", 1, 4),
    ("5-8", 5, 8),
    ("9-12", 9, 12),
    ("13-24", 13, 24),
    ("25-48", 25, 48),
    ("49-96", 49, 96),
    ("97-144", 97, 144),
    (">144", 145, None),
)


class EvalError(Exception):
    pass


# ---------------------------------------------------------------------------
# metrics


def _errors(estimates: Iterable[Estimate]) -> np.ndarray:
    return np.array(
        [e.actual_hours - e.final_hours for e in estimates if e.final_hours is not None]
    )


def mae(estimates: Iterable[Estimate]) -> float:
    """Mean absolute error over estimated tweets."""
    errors = _errors(estimates)
    if errors.size == 0:
        raise EvalError("mae of an empty estimate set")
    return float(np.mean(np.abs(errors)))


def rmse(estimates: Iterable[Estimate]) -> float:
    """Root mean squared error over estimated tweets."""
    errors = _errors(estimates)
    if errors.size == 0:
        raise EvalError("rmse of an empty estimate set")
    return float(np.sqrt(np.mean(errors**2)))


def coverage(estimates: Sequence[Estimate]) -> float:
    """Fraction of tweets for which any estimate was produced."""
    if not estimates:
        raise EvalError("coverage of an empty tweet set")
    return sum(1 for e in estimates if e.estimated) / len(estimates)


def range_table(estimates: Sequence[Estimate]) -> list[dict]:
    """Per-bin MAE, bucketing by the floor of the actual TTE.

    Empty bins are omitted rather than reported as zero.
    """
    bins: dict[str, list[float]] = {}
    for e in estimates:
        if e.final_hours is None:
            continue
        f = math.floor(e.actual_hours)
        for label, lo, hi in RANGE_BINS:
            if f >= lo and (hi is None or f <= hi):
                bins.setdefault(label, []).append(abs(e.actual_hours - e.final_hours))
                break
    return [
        {"range": label, "n": len(errs), "mae": float(np.mean(errs))}
        for label, _, _ in RANGE_BINS
        if (errs := bins.get(label))
    ]


def hourly_curve(
    estimates: Sequence[Estimate], bin_hours: float = 4.0
) -> list[tuple[float, float]]:
    """(bin center, MAE) samples over actual-TTE bins, for plotting."""
    if bin_hours <= 0:
        raise EvalError("bin_hours must be positive")
    bins: dict[int, list[float]] = {}
    for e in estimates:
        if e.final_hours is None:
            continue
        idx = int(e.actual_hours // bin_hours)
        bins.setdefault(idx, []).append(abs(e.actual_hours - e.final_hours))
    return [
        ((idx + 0.5) * bin_hours, float(np.mean(errs)))
        for idx, errs in sorted(bins.items())
    ]


# ---------------------------------------------------------------------------
# kernel density diagnostics


def silverman_bandwidth(series: Sequence[float]) -> float:
    x = np.asarray(series, dtype=float)
    std = float(np.std(x))
    q75, q25 = np.percentile(x, [75, 25])
    scale = min(std, (q75 - q25) / 1.34)
    if scale == 0.0:
        scale = std
    return 0.9 * scale * x.size ** (-0.2)


def kde(series: Sequence[float], grid: Sequence[float]) -> np.ndarray:
    """Gaussian kernel density with Silverman bandwidth, sampled on grid."""
    x = np.asarray(series, dtype=float)
    if x.size < 2:
        raise EvalError("kde needs at least two observations")
    bw = silverman_bandwidth(x)
    if bw <= 0.0:
        raise EvalError("kde of a zero-variance series is a degenerate spike")
    g = np.asarray(grid, dtype=float)
    z = (g[:, None] - x[None, :]) / bw
    return np.exp(-0.5 * z**2).mean(axis=1) / (bw * math.sqrt(2.0 * math.pi))


def kde_grid(series: Sequence[float], points: int = 256, pad: float = 4.0) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    bw = silverman_bandwidth(x)
    return np.linspace(x.min() - pad * bw, x.max() + pad * bw, points)


# ---------------------------------------------------------------------------
# vectorized fold training


class KindIndex:
    """Interned (tweet, feature) occurrences of one feature kind.

    Rows are kept sorted by (feature id, tte) so that any fold's series
    statistics — count, mean, population std, median — come out of
    segment arithmetic on a boolean-masked view.
    """

    def __init__(self, kind: FeatureKind) -> None:
        self.kind = kind
        self._ids: dict[str, int] = {}
        self.surfaces: list[str] = []
        self._row_key: list[np.ndarray] = []
        self._row_event: list[np.ndarray] = []
        self._row_tweet: list[np.ndarray] = []
        self._row_tte: list[np.ndarray] = []
        self.row_key: np.ndarray | None = None
        self.row_event: np.ndarray | None = None
        self.row_tweet: np.ndarray | None = None
        self.row_tte: np.ndarray | None = None

    def lookup(self, surfaces: Iterable[str]) -> np.ndarray:
        """Ids of already-interned surfaces; unknown ones are skipped."""
        return np.array(
            [i for s in dict.fromkeys(surfaces) if (i := self._ids.get(s)) is not None],
            dtype=np.int64,
        )

    def add_tweet(
        self, event_idx: int, tweet_idx: int, tte: float, surfaces: Iterable[str]
    ) -> np.ndarray:
        """Intern one tweet's (deduplicated) feature surfaces; returns ids."""
        ids = []
        for surface in dict.fromkeys(surfaces):
            key_id = self._ids.get(surface)
            if key_id is None:
                key_id = len(self.surfaces)
                self._ids[surface] = key_id
                self.surfaces.append(surface)
            ids.append(key_id)
        arr = np.array(ids, dtype=np.int64)
        if arr.size:
            self._row_key.append(arr)
            self._row_event.append(np.full(arr.size, event_idx, dtype=np.int64))
            self._row_tweet.append(np.full(arr.size, tweet_idx, dtype=np.int64))
            self._row_tte.append(np.full(arr.size, tte, dtype=np.float64))
        return arr

    def finalize(self) -> None:
        if self._row_key:
            key = np.concatenate(self._row_key)
            event = np.concatenate(self._row_event)
            tweet = np.concatenate(self._row_tweet)
            tte = np.concatenate(self._row_tte)
            order = np.lexsort((tte, key))
            self.row_key = key[order]
            self.row_event = event[order]
            self.row_tweet = tweet[order]
            self.row_tte = tte[order]
        else:
            self.row_key = np.empty(0, dtype=np.int64)
            self.row_event = np.empty(0, dtype=np.int64)
            self.row_tweet = np.empty(0, dtype=np.int64)
            self.row_tte = np.empty(0, dtype=np.float64)

    def fold_values(
        self, exclude_event: int, quantile_cutoff: float, fn: Fn
    ) -> tuple[np.ndarray, np.ndarray]:
        """(value per feature id, support per feature id) excluding one event.

        Unselected features carry NaN / 0. Pass exclude_event=-1 to train
        on everything.
        """
        n_keys = len(self.surfaces)
        values = np.full(n_keys, np.nan)
        support = np.zeros(n_keys, dtype=np.int64)
        mask = self.row_event != exclude_event
        key = self.row_key[mask]
        tte = self.row_tte[mask]
        if key.size == 0:
            return values, support
        starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
        counts = np.diff(np.r_[starts, key.size])
        seg_key = key[starts]
        non_hapax = counts >= 2
        if not non_hapax.any():
            return values, support
        starts = starts[non_hapax]
        counts = counts[non_hapax]
        seg_key = seg_key[non_hapax]
        # cumulative sums give exact per-segment sums even though hapax
        # segments were dropped from the start list
        csum = np.concatenate([[0.0], np.cumsum(tte)])
        csumsq = np.concatenate([[0.0], np.cumsum(tte * tte)])
        ends = starts + counts
        sums = csum[ends] - csum[starts]
        sumsq = csumsq[ends] - csumsq[starts]
        mean = sums / counts
        var = np.maximum(sumsq / counts - mean**2, 0.0)
        std = np.sqrt(var)
        threshold = nearest_rank_quantile(np.sort(std), quantile_cutoff)
        selected = std <= threshold
        if fn is Fn.MEDIAN:
            lo = tte[starts + (counts - 1) // 2]
            hi = tte[starts + counts // 2]
            vals = (lo + hi) / 2.0
        else:
            vals = mean
        values[seg_key[selected]] = vals[selected]
        support[seg_key[selected]] = counts[selected]
        return values, support

    def contributing_tweets(self, exclude_event: int) -> np.ndarray:
        """Tweet ordinals whose rows enter the fold's feature table."""
        return np.unique(self.row_tweet[self.row_event != exclude_event])


def _agg_matched(values: np.ndarray, ids: np.ndarray, fn: Fn) -> float | None:
    if ids.size == 0:
        return None
    matched = values[ids]
    matched = matched[~np.isnan(matched)]
    if matched.size == 0:
        return None
    if fn is Fn.MEDIAN:
        return float(np.median(matched))
    return float(np.mean(matched))


# ---------------------------------------------------------------------------
# report structures


@dataclass(frozen=True)
class PassMetrics:
    mae: float | None
    rmse: float | None
    coverage: float
    n_estimated: int
    n_total: int

    def to_json_dict(self) -> dict:
        return {
            "mae": self.mae,
            "rmse": self.rmse,
            "coverage": self.coverage,
            "n_estimated": self.n_estimated,
            "n_total": self.n_total,
        }


@dataclass(frozen=True)
class FoldAudit:
    event_id: str
    training_tweet_ids: frozenset[str]
    test_tweet_ids: frozenset[str]


@dataclass
class EvalReport:
    config: dict
    n_events: int
    n_tweets: int
    passes: dict[str, PassMetrics]
    baselines: dict[str, PassMetrics]
    macro: dict[str, float | None]
    per_event: list[dict]
    range_rows: list[dict]
    curve: list[tuple[float, float]]
    records: dict[str, list[Estimate]] = field(default_factory=dict, repr=False)
    fold_audits: list[FoldAudit] | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "n_events": self.n_events,
            "n_tweets": self.n_tweets,
            "passes": {k: v.to_json_dict() for k, v in self.passes.items()},
            "baselines": {k: v.to_json_dict() for k, v in self.baselines.items()},
            "macro": self.macro,
            "per_event": self.per_event,
            "range_table": self.range_rows,
            "hourly_curve": [list(pair) for pair in self.curve],
        }

    def to_tsv(self) -> str:
        """Summary rows RMSE / MAE / Coverage per feature-set column."""
        columns = ["rule", "temporal", "word", "all", "mean_baseline", "median_baseline"]
        cells: dict[str, PassMetrics] = dict(self.passes)
        cells["mean_baseline"] = self.baselines["mean"]
        cells["median_baseline"] = self.baselines["median"]

        def fmt(value: float | None) -> str:
            return "" if value is None else f"{value:.4f}"

        lines = ["metric\t" + "\t".join(columns)]
        for metric in ("rmse", "mae", "coverage"):
            row = [metric]
            for col in columns:
                pm = cells[col]
                row.append(fmt(getattr(pm, metric)))
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"


def _pass_metrics(records: Sequence[Estimate]) -> PassMetrics:
    estimated = [e for e in records if e.estimated]
    return PassMetrics(
        mae=mae(estimated) if estimated else None,
        rmse=rmse(estimated) if estimated else None,
        coverage=len(estimated) / len(records) if records else 0.0,
        n_estimated=len(estimated),
        n_total=len(records),
    )


def _constant_metrics(actuals: np.ndarray, constant: float) -> PassMetrics:
    errors = actuals - constant
    return PassMetrics(
        mae=float(np.mean(np.abs(errors))),
        rmse=float(np.sqrt(np.mean(errors**2))),
        coverage=1.0,
        n_estimated=int(actuals.size),
        n_total=int(actuals.size),
    )


# ---------------------------------------------------------------------------
# leave-one-event-out harness


@dataclass
class _PreparedEvent:
    event_id: str
    tweets: list[LabeledTweet]
    rule_hours: list[float | None]
    t_ids: list[np.ndarray]
    w_ids: list[np.ndarray]
    ttes: np.ndarray


def _prepare(
    labeled: Sequence[LabeledTweet],
    events: Sequence[Event],
    resources,
    config,
    *,
    temporal_index: KindIndex | None = None,
    word_index: KindIndex | None = None,
) -> tuple[list[_PreparedEvent], KindIndex, KindIndex]:
    """Extract every tweet once and intern its features.

    When existing indexes are passed, features are looked up instead of
    interned (test-side preparation of a transfer run).
    """
    groups = group_by_event(labeled)
    ordered = [ev.event_id for ev in events if ev.event_id in groups]
    intern = temporal_index is None
    if temporal_index is None:
        temporal_index = KindIndex(FeatureKind.TEMPORAL)
    if word_index is None:
        word_index = KindIndex(FeatureKind.WORD)
    prepared: list[_PreparedEvent] = []
    tweet_idx = 0
    for event_pos, event_id in enumerate(ordered):
        tweets = groups[event_id]
        pe = _PreparedEvent(
            event_id=event_id,
            tweets=tweets,
            rule_hours=[],
            t_ids=[],
            w_ids=[],
            ttes=np.array([lt.tte_hours for lt in tweets]),
        )
        for lt in tweets:
            feats = extract_features(
                lt,
                resources.patterns,
                resources.ruleset,
                resources.wordlist,
                resources.stoplist,
                config.feature_length,
                config.rule_clamp_nonnegative,
            )
            pe.rule_hours.append(feats.rule_hours)
            t_surfaces = (k.surface for k in feats.tfeats)
            w_surfaces = (k.surface for k in feats.wfeats)
            if intern:
                pe.t_ids.append(
                    temporal_index.add_tweet(event_pos, tweet_idx, lt.tte_hours, t_surfaces)
                )
                pe.w_ids.append(
                    word_index.add_tweet(event_pos, tweet_idx, lt.tte_hours, w_surfaces)
                )
            else:
                pe.t_ids.append(temporal_index.lookup(t_surfaces))
                pe.w_ids.append(word_index.lookup(w_surfaces))
            tweet_idx += 1
        prepared.append(pe)
    if intern:
        temporal_index.finalize()
        word_index.finalize()
    return prepared, temporal_index, word_index


def _estimate_event(
    pe: _PreparedEvent,
    temporal_values: np.ndarray,
    word_values: np.ndarray,
    estimation_fn: Fn,
    window: int,
) -> dict[str, list[Estimate]]:
    """Run the four estimation passes over one held-out event."""
    cands = []
    for i, lt in enumerate(pe.tweets):
        cands.append(
            (
                pe.rule_hours[i],
                _agg_matched(temporal_values, pe.t_ids[i], estimation_fn),
                _agg_matched(word_values, pe.w_ids[i], estimation_fn),
            )
        )
    out: dict[str, list[Estimate]] = {}
    for pass_name, enabled in PASSES.items():
        buffer = HistoryBuffer()
        records: list[Estimate] = []
        for lt, (rule, temporal, word) in zip(pe.tweets, cands):
            source, raw = combine(
                rule if Source.RULE in enabled else None,
                temporal if Source.TEMPORAL in enabled else None,
                word if Source.WORD in enabled else None,
            )
            if raw is None:
                records.append(
                    Estimate(
                        lt.tweet.id, Source.NONE, None, None, lt.tte_hours, pe.event_id
                    )
                )
                continue
            final = apply_history(buffer, source, raw, window)
            buffer.append(source, raw)
            records.append(
                Estimate(lt.tweet.id, source, raw, final, lt.tte_hours, pe.event_id)
            )
        out[pass_name] = records
    return out


def loeo(
    labeled: Sequence[LabeledTweet],
    events: Sequence[Event],
    resources,
    config,
    *,
    audit: bool = False,
    workers: int = 1,
) -> EvalReport:
    """Leave-one-event-out cross-validation over the labeled corpus."""
    prepared, temporal_index, word_index = _prepare(labeled, events, resources, config)
    if len(prepared) < 2:
        raise EvalError("leave-one-event-out needs at least two events with tweets")
    training_fn = Fn(config.training_function)
    estimation_fn = Fn(config.estimation_function)
    all_ttes = np.concatenate([pe.ttes for pe in prepared])
    tweet_ids = [lt.tweet.id for pe in prepared for lt in pe.tweets]

    def run_fold(fold: int) -> tuple[dict[str, list[Estimate]], dict, FoldAudit | None]:
        pe = prepared[fold]
        t_values, _ = temporal_index.fold_values(
            fold, config.quantile_temporal, training_fn
        )
        w_values, _ = word_index.fold_values(fold, config.quantile_word, training_fn)
        records = _estimate_event(
            pe, t_values, w_values, estimation_fn, config.history_window
        )
        train_ttes = np.concatenate(
            [other.ttes for i, other in enumerate(prepared) if i != fold]
        )
        fold_baselines = {
            "mean": float(np.mean(train_ttes)),
            "median": float(np.median(train_ttes)),
        }
        fold_audit = None
        if audit:
            contributing = set(
                np.concatenate(
                    [
                        temporal_index.contributing_tweets(fold),
                        word_index.contributing_tweets(fold),
                    ]
                ).tolist()
            )
            fold_audit = FoldAudit(
                event_id=pe.event_id,
                training_tweet_ids=frozenset(tweet_ids[i] for i in contributing),
                test_tweet_ids=frozenset(lt.tweet.id for lt in pe.tweets),
            )
        return records, fold_baselines, fold_audit

    folds = range(len(prepared))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_fold, folds))
    else:
        results = [run_fold(f) for f in folds]

    records: dict[str, list[Estimate]] = {name: [] for name in PASSES}
    baseline_mean_errors: list[np.ndarray] = []
    baseline_median_errors: list[np.ndarray] = []
    audits: list[FoldAudit] = []
    for fold, (fold_records, fold_baselines, fold_audit) in zip(folds, results):
        for name in PASSES:
            records[name].extend(fold_records[name])
        pe = prepared[fold]
        baseline_mean_errors.append(pe.ttes - fold_baselines["mean"])
        baseline_median_errors.append(pe.ttes - fold_baselines["median"])
        if fold_audit is not None:
            audits.append(fold_audit)

    combined = records["all"]
    per_event = []
    macro_mae: list[float] = []
    macro_rmse: list[float] = []
    macro_cov: list[float] = []
    for pe in prepared:
        event_records = [e for e in combined if e.event_id == pe.event_id]
        pm = _pass_metrics(event_records)
        per_event.append(
            {
                "event_id": pe.event_id,
                "n_tweets": pm.n_total,
                "n_estimated": pm.n_estimated,
                "mae": pm.mae,
                "rmse": pm.rmse,
                "coverage": pm.coverage,
            }
        )
        if pm.mae is not None:
            macro_mae.append(pm.mae)
            macro_rmse.append(pm.rmse)
        macro_cov.append(pm.coverage)

    def _const_pm(errors: list[np.ndarray]) -> PassMetrics:
        err = np.concatenate(errors)
        return PassMetrics(
            mae=float(np.mean(np.abs(err))),
            rmse=float(np.sqrt(np.mean(err**2))),
            coverage=1.0,
            n_estimated=int(err.size),
            n_total=int(err.size),
        )

    report = EvalReport(
        config=config.snapshot() if hasattr(config, "snapshot") else dict(config),
        n_events=len(prepared),
        n_tweets=int(all_ttes.size),
        passes={name: _pass_metrics(records[name]) for name in PASSES},
        baselines={
            "mean": _const_pm(baseline_mean_errors),
            "median": _const_pm(baseline_median_errors),
        },
        macro={
            "mae": float(np.mean(macro_mae)) if macro_mae else None,
            "rmse": float(np.mean(macro_rmse)) if macro_rmse else None,
            "coverage": float(np.mean(macro_cov)) if macro_cov else None,
        },
        per_event=per_event,
        range_rows=range_table(combined),
        curve=hourly_curve(combined),
        records=records,
        fold_audits=audits if audit else None,
    )
    return report


def transfer_eval(
    train_labeled: Sequence[LabeledTweet],
    train_events: Sequence[Event],
    test_labeled: Sequence[LabeledTweet],
    test_events: Sequence[Event],
    resources,
    config,
) -> EvalReport:
    """Train on one corpus, test on the events of another."""
    train_prep, temporal_index, word_index = _prepare(
        train_labeled, train_events, resources, config
    )
    test_prep, _, _ = _prepare(
        test_labeled,
        test_events,
        resources,
        config,
        temporal_index=temporal_index,
        word_index=word_index,
    )
    if not train_prep or not test_prep:
        raise EvalError("transfer evaluation needs tweets on both sides")
    training_fn = Fn(config.training_function)
    estimation_fn = Fn(config.estimation_function)
    t_values, _ = temporal_index.fold_values(-1, config.quantile_temporal, training_fn)
    w_values, _ = word_index.fold_values(-1, config.quantile_word, training_fn)
    records: dict[str, list[Estimate]] = {name: [] for name in PASSES}
    for pe in test_prep:
        fold_records = _estimate_event(
            pe, t_values, w_values, estimation_fn, config.history_window
        )
        for name in PASSES:
            records[name].extend(fold_records[name])
    combined = records["all"]
    train_ttes = np.concatenate([pe.ttes for pe in train_prep])
    test_ttes = np.concatenate([pe.ttes for pe in test_prep])
    report = EvalReport(
        config=config.snapshot() if hasattr(config, "snapshot") else dict(config),
        n_events=len(test_prep),
        n_tweets=int(test_ttes.size),
        passes={name: _pass_metrics(records[name]) for name in PASSES},
        baselines={
            "mean": _constant_metrics(test_ttes, float(np.mean(train_ttes))),
            "median": _constant_metrics(test_ttes, float(np.median(train_ttes))),
        },
        macro={"mae": None, "rmse": None, "coverage": None},
        per_event=[],
        range_rows=range_table(combined),
        curve=hourly_curve(combined),
        records=records,
    )
    return report
