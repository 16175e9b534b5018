"""Command-line entry point for the full pipeline.

Subcommands: generate-patterns, train, estimate, evaluate, baseline,
synthesize, report. All outputs are UTF-8 JSON-lines or TSV; exit code
2 flags usage errors, 1 data errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config as config_mod
from . import corpus, estimator, evaluate, report as report_mod, synth
from .features import Fn, TrainedModel, train_model


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument("--window-hours", type=float, dest="window_hours")
    parser.add_argument("--feature-length", type=int, dest="feature_length")
    parser.add_argument("--quantile-word", type=float, dest="quantile_word")
    parser.add_argument("--quantile-temporal", type=float, dest="quantile_temporal")
    parser.add_argument("--training-function", dest="training_function")
    parser.add_argument("--estimation-function", dest="estimation_function")
    parser.add_argument("--history-window", type=int, dest="history_window")
    parser.add_argument("--keep-retweets", action="store_true", default=None)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--lexicon", dest="lexicon_path")
    parser.add_argument("--grammar", dest="grammar_path")
    parser.add_argument("--rules", dest="rules_path")
    parser.add_argument("--wordlist", dest="wordlist_path")
    parser.add_argument("--stoplist", dest="stoplist_path")


_CONFIG_KEYS = (
    "window_hours",
    "feature_length",
    "quantile_word",
    "quantile_temporal",
    "training_function",
    "estimation_function",
    "history_window",
    "workers",
    "lexicon_path",
    "grammar_path",
    "rules_path",
    "wordlist_path",
    "stoplist_path",
)


def _config_from_args(args: argparse.Namespace) -> config_mod.PipelineConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if getattr(args, "keep_retweets", None):
        overrides["remove_retweets"] = False
    return config_mod.load_config(args.config, overrides)


def _load_labeled(
    tweets_path: str, events_path: str, cfg: config_mod.PipelineConfig
) -> tuple[list[corpus.LabeledTweet], list[corpus.Event]]:
    tweets, tweet_errors = corpus.load_tweets(tweets_path)
    events, event_errors = corpus.load_events(events_path)
    labeled, label_errors = corpus.label_and_window(
        tweets, events, cfg.window_hours, cfg.remove_retweets
    )
    for err in tweet_errors + event_errors + label_errors:
        print(f"record error at line {err.index}: {err.message}", file=sys.stderr)
    if not labeled:
        raise corpus.DataError("no usable tweets after labeling and windowing")
    return labeled, events


def _cmd_generate_patterns(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    resources = config_mod.load_resources(cfg)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for pattern in resources.patterns.patterns:
            out.write(" ".join(pattern) + "\n")
    finally:
        if args.out:
            out.close()
    print(
        f"{len(resources.patterns)} unique patterns "
        f"({resources.patterns.generated_count} generated, "
        f"max length {resources.patterns.max_pattern_len} tokens)",
        file=sys.stderr,
    )
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    resources = config_mod.load_resources(cfg)
    labeled, _ = _load_labeled(args.tweets, args.events, cfg)
    model = train_model(
        labeled,
        resources.patterns,
        resources.wordlist,
        resources.stoplist,
        feature_length=cfg.feature_length,
        quantile_cutoff_word=cfg.quantile_word,
        quantile_cutoff_temporal=cfg.quantile_temporal,
        training_function=Fn(cfg.training_function),
        estimation_function=Fn(cfg.estimation_function),
        window_size=cfg.history_window,
        pipeline_config=cfg.snapshot(),
    )
    model.save(args.model)
    print(f"trained {len(model.values)} features from {len(labeled)} tweets", file=sys.stderr)
    return 0


def _iter_stdin_tweets() -> list[corpus.Tweet]:
    tweets = []
    for i, line in enumerate(sys.stdin):
        if not line.strip():
            continue
        obj = json.loads(line)
        tweets.append(
            corpus.Tweet(
                id=str(obj["id"]),
                text=corpus.normalize(str(obj["text"])),
                posted_at=corpus.parse_timestamp(str(obj["created_at"])),
                event_id=str(obj["event_id"]),
            )
        )
    return tweets


def _cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    resources = config_mod.load_resources(cfg)
    model = TrainedModel.load(args.model)
    events, event_errors = corpus.load_events(args.events)
    for err in event_errors:
        print(f"record error at line {err.index}: {err.message}", file=sys.stderr)
    if args.tweets == "-":
        tweets = _iter_stdin_tweets()
    else:
        tweets, tweet_errors = corpus.load_tweets(args.tweets)
        for err in tweet_errors:
            print(f"record error at line {err.index}: {err.message}", file=sys.stderr)
    labeled, label_errors = corpus.label_and_window(
        tweets, events, cfg.window_hours, cfg.remove_retweets
    )
    for err in label_errors:
        print(f"record error at line {err.index}: {err.message}", file=sys.stderr)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for event_tweets in corpus.group_by_event(labeled).values():
            estimates = estimator.estimate_stream(
                event_tweets,
                resources.patterns,
                resources.ruleset,
                model,
                wordlist=resources.wordlist,
                stoplist=resources.stoplist,
                window_size=cfg.history_window,
                clamp_nonnegative=cfg.rule_clamp_nonnegative,
            )
            for est in estimates:
                out.write(json.dumps(est.to_json_dict()) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    resources = config_mod.load_resources(cfg)
    if args.transfer:
        train_tweets_path, test_tweets_path = args.transfer
        train_labeled, train_events = _load_labeled(train_tweets_path, args.events, cfg)
        test_events_path = args.test_events or args.events
        test_labeled, test_events = _load_labeled(test_tweets_path, test_events_path, cfg)
        result = evaluate.transfer_eval(
            train_labeled, train_events, test_labeled, test_events, resources, cfg
        )
    else:
        labeled, events = _load_labeled(args.tweets, args.events, cfg)
        result = evaluate.loeo(
            labeled, events, resources, cfg, workers=cfg.effective_workers()
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(result.to_json_dict(), fh, indent=1)
        fh.write("\n")
    (out_dir / "summary.tsv").write_text(result.to_tsv(), encoding="utf-8")
    if args.estimates_out:
        with open(args.estimates_out, "w", encoding="utf-8") as fh:
            for est in result.records.get("all", []):
                fh.write(json.dumps(est.to_json_dict()) + "\n")
    print(result.to_tsv(), end="", file=sys.stderr)
    print(f"report written to {report_path}", file=sys.stderr)
    return 0


def _cmd_baseline(args: argparse.Namespace) -> int:
    from .regressors import baseline_fit

    cfg = _config_from_args(args)
    labeled, _ = _load_labeled(args.tweets, args.events, cfg)
    baseline = baseline_fit(labeled)
    payload = json.dumps(
        {"mean_hours": baseline.mean_hours, "median_hours": baseline.median_hours}
    )
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        print(payload)
    return 0


def _cmd_synthesize(args: argparse.Namespace) -> int:
    spec = synth.SynthSpec(
        n_events=args.events_count,
        tweets_per_event=args.tweets_per_event,
        seed=args.seed,
        frac_exact=args.frac_exact,
        frac_dynamic=args.frac_dynamic,
        frac_word=args.frac_word,
    )
    paths = synth.synthesize(spec).write(args.out_dir)
    print(
        f"wrote {spec.n_events * spec.tweets_per_event} tweets to {paths['tweets']}",
        file=sys.stderr,
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    model = labeled = resources = None
    if args.model and args.tweets and args.events:
        cfg = _config_from_args(args)
        resources = config_mod.load_resources(cfg)
        model = TrainedModel.load(args.model)
        labeled, _ = _load_labeled(args.tweets, args.events, cfg)
    written = report_mod.render_report(
        args.report, args.out_dir, model=model, labeled=labeled, resources=resources
    )
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttekit",
        description="Estimate the remaining hours between microtexts and "
        "the future events they refer to.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-patterns", help="emit the expanded pattern list")
    _add_config_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_generate_patterns)

    p = sub.add_parser("train", help="train a feature-value model")
    _add_config_flags(p)
    p.add_argument("--tweets", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--model", required=True, help="output model JSON path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("estimate", help="stream per-tweet estimates")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--tweets", required=True, help="JSON-lines file or - for stdin")
    p.add_argument("--events", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("evaluate", help="leave-one-event-out evaluation")
    _add_config_flags(p)
    p.add_argument("--tweets")
    p.add_argument("--events", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--estimates-out", help="also write combined estimates JSONL")
    p.add_argument(
        "--transfer",
        nargs=2,
        metavar=("TRAIN_TWEETS", "TEST_TWEETS"),
        help="train on the first tweet file, test on the second",
    )
    p.add_argument("--test-events", help="event manifest for the transfer test set")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("baseline", help="constant mean/median baselines")
    _add_config_flags(p)
    p.add_argument("--tweets", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("synthesize", help="generate a synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--events", type=int, default=50, dest="events_count")
    p.add_argument("--tweets-per-event", type=int, default=200)
    p.add_argument("--frac-exact", type=float, default=0.30)
    p.add_argument("--frac-dynamic", type=float, default=0.10)
    p.add_argument("--frac-word", type=float, default=0.60)
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("report", help="render TSV and figures from a report")
    _add_config_flags(p)
    p.add_argument("--report", required=True, help="report.json from evaluate")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--model", help="model JSON for feature KDE diagnostics")
    p.add_argument("--tweets")
    p.add_argument("--events")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "evaluate" and not args.transfer and not args.tweets:
        parser.error("evaluate needs --tweets (or --transfer)")
    try:
        return args.func(args)
    except (
        corpus.DataError,
        config_mod.ConfigError,
        evaluate.EvalError,
        synth.SynthSpecError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
