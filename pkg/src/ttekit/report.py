"""Render an evaluation report to delimited files and figures.

Takes the JSON document written by ``ttekit evaluate`` and produces the
tab-separated summary plus PNG figures: the error curve relative to
event start, MAE per actual-TTE range, the per-event error
distribution, and per-pass coverage/error bars. Given a trained model
and a corpus, it also draws kernel-density diagnostics of the most
supported features' occurrence-time series.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import LabeledTweet
from .estimator import extract_features
from .evaluate import kde, kde_grid
from .features import FeatureKey, TrainedModel

PASS_COLUMNS = ("rule", "temporal", "word", "all", "mean_baseline", "median_baseline")


def summary_tsv(report: Mapping) -> str:
    cells = dict(report["passes"])
    cells["mean_baseline"] = report["baselines"]["mean"]
    cells["median_baseline"] = report["baselines"]["median"]

    def fmt(value) -> str:
        return "" if value is None else f"{value:.4f}"

    lines = ["metric\t" + "\t".join(PASS_COLUMNS)]
    for metric in ("rmse", "mae", "coverage"):
        lines.append(
            "\t".join([metric] + [fmt(cells[col].get(metric)) for col in PASS_COLUMNS])
        )
    return "\n".join(lines) + "\n"


def per_event_tsv(report: Mapping) -> str:
    lines = ["event_id\tn_tweets\tn_estimated\tcoverage\tmae\trmse"]
    for row in report["per_event"]:
        lines.append(
            "\t".join(
                [
                    str(row["event_id"]),
                    str(row["n_tweets"]),
                    str(row["n_estimated"]),
                    f"{row['coverage']:.4f}",
                    "" if row["mae"] is None else f"{row['mae']:.4f}",
                    "" if row["rmse"] is None else f"{row['rmse']:.4f}",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def error_curve_figure(report: Mapping, path: Path) -> Path | None:
    curve = report.get("hourly_curve") or []
    if not curve:
        return None
    centers = [-c for c, _ in curve]  # hours before the event, negative axis
    values = [v for _, v in curve]
    fig, ax = _new_axes(
        "Estimation error relative to event start", "hours to event", "MAE (h)"
    )
    ax.plot(centers, values, marker="o", ms=3, lw=1.2)
    ax.invert_xaxis()
    return _save(fig, path)


def range_figure(report: Mapping, path: Path) -> Path | None:
    rows = report.get("range_table") or []
    if not rows:
        return None
    fig, ax = _new_axes("MAE per actual-TTE range", "TTE range (h)", "MAE (h)")
    ax.bar([r["range"] for r in rows], [r["mae"] for r in rows], color="#4878a8")
    return _save(fig, path)


def per_event_figure(report: Mapping, path: Path) -> Path | None:
    maes = [row["mae"] for row in report.get("per_event", []) if row["mae"] is not None]
    if not maes:
        return None
    fig, ax = _new_axes("Per-event MAE distribution", "MAE (h)", "events")
    ax.hist(maes, bins=min(20, max(5, len(maes) // 2)), color="#4878a8")
    return _save(fig, path)


def pass_summary_figure(report: Mapping, path: Path) -> Path | None:
    cells = dict(report["passes"])
    cells["mean_baseline"] = report["baselines"]["mean"]
    cells["median_baseline"] = report["baselines"]["median"]
    labels = [c for c in PASS_COLUMNS if cells[c].get("mae") is not None]
    if not labels:
        return None
    x = range(len(labels))
    fig, ax = _new_axes("Error and coverage per feature set", "", "hours")
    ax.bar([i - 0.2 for i in x], [cells[c]["mae"] for c in labels], 0.4, label="MAE")
    ax.bar([i + 0.2 for i in x], [cells[c]["rmse"] for c in labels], 0.4, label="RMSE")
    ax.set_xticks(list(x), labels, rotation=20)
    twin = ax.twinx()
    twin.plot(
        list(x),
        [cells[c]["coverage"] for c in labels],
        color="#303030",
        marker="D",
        lw=1.0,
        label="coverage",
    )
    twin.set_ylabel("coverage")
    twin.set_ylim(0, 1.05)
    ax.legend(loc="upper left")
    return _save(fig, path)


def feature_kde_figure(
    model: TrainedModel,
    labeled: Sequence[LabeledTweet],
    resources,
    path: Path,
    top_n: int = 6,
) -> Path | None:
    """Density of occurrence times for the model's best-supported features."""
    chosen = sorted(
        model.values, key=lambda k: model.support.get(k, 0), reverse=True
    )[:top_n]
    if not chosen:
        return None
    series: dict[FeatureKey, list[float]] = {key: [] for key in chosen}
    wanted = set(chosen)
    for lt in labeled:
        feats = extract_features(
            lt,
            resources.patterns,
            resources.ruleset,
            resources.wordlist,
            resources.stoplist,
            model.feature_length,
        )
        for key in set(feats.tfeats) | set(feats.wfeats):
            if key in wanted:
                series[key].append(lt.tte_hours)
    fig, ax = _new_axes(
        "Occurrence-time density of top features", "hours to event", "density"
    )
    drawn = False
    for key, values in series.items():
        if len(values) < 2 or len(set(values)) < 2:
            continue
        grid = kde_grid(values)
        ax.plot(grid, kde(values, grid), lw=1.2, label=f"{key.surface} ({key.kind.value})")
        drawn = True
    if not drawn:
        plt.close(fig)
        return None
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_report(
    report: Mapping | str | Path,
    out_dir: str | Path,
    *,
    model: TrainedModel | None = None,
    labeled: Sequence[LabeledTweet] | None = None,
    resources=None,
) -> list[Path]:
    """Write the TSV summaries and every applicable figure; returns paths."""
    if not isinstance(report, Mapping):
        with open(report, encoding="utf-8") as fh:
            report = json.load(fh)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    summary = out / "summary.tsv"
    summary.write_text(summary_tsv(report), encoding="utf-8")
    written.append(summary)
    if report.get("per_event"):
        per_event = out / "per_event.tsv"
        per_event.write_text(per_event_tsv(report), encoding="utf-8")
        written.append(per_event)
    for maker, name in (
        (error_curve_figure, "error_curve.png"),
        (range_figure, "range_mae.png"),
        (per_event_figure, "event_mae.png"),
        (pass_summary_figure, "pass_summary.png"),
    ):
        result = maker(report, out / name)
        if result is not None:
            written.append(result)
    if model is not None and labeled is not None and resources is not None:
        result = feature_kde_figure(model, labeled, resources, out / "feature_kde.png")
        if result is not None:
            written.append(result)
    return written
