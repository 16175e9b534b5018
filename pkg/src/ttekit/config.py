"""Pipeline configuration: defaults, validation, resource loading.

The config file is a flat JSON document; absent keys fall back to the
defaults below and every CLI flag can override its key. The loaded
snapshot is echoed into serialized models and evaluation reports.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Iterable

from .features import Fn
from .rules import RuleSet, parse_rules
from .texpr import CompiledPatternSet, GenerativeRule, Lexicon, expand, parse_grammar


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    window_hours: float = 192.0
    feature_length: int = 2
    quantile_word: float = 0.20
    quantile_temporal: float = 0.25
    training_function: str = "median"
    estimation_function: str = "median"
    history_window: int = 15
    remove_retweets: bool = True
    rule_clamp_nonnegative: bool = True
    lexicon_path: str | None = None
    grammar_path: str | None = None
    rules_path: str | None = None
    wordlist_path: str | None = None
    stoplist_path: str | None = None
    workers: int = 0  # 0 means available parallelism

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)

    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)


_FIELD_NAMES = {f.name for f in dataclasses.fields(PipelineConfig)}
_PATH_FIELDS = (
    "lexicon_path",
    "grammar_path",
    "rules_path",
    "wordlist_path",
    "stoplist_path",
)


def validate_config(config: PipelineConfig) -> None:
    """Raise a ConfigError naming the first offending key."""
    checks = (
        (config.window_hours > 0, "window_hours", "must be positive"),
        (1 <= config.feature_length <= 7, "feature_length", "must be in [1, 7]"),
        (0.0 <= config.quantile_word < 1.0, "quantile_word", "must be in [0, 1)"),
        (
            0.0 <= config.quantile_temporal < 1.0,
            "quantile_temporal",
            "must be in [0, 1)",
        ),
        (config.history_window >= 0, "history_window", "must be >= 0"),
        (config.workers >= 0, "workers", "must be >= 0"),
    )
    for ok, key, message in checks:
        if not ok:
            raise ConfigError(f"{key} {message}: got {getattr(config, key)}")
    for key in ("training_function", "estimation_function"):
        value = getattr(config, key)
        try:
            Fn(value)
        except ValueError:
            raise ConfigError(f"{key} must be 'mean' or 'median': got {value!r}")
    for key in _PATH_FIELDS:
        value = getattr(config, key)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"{key} points to a missing file: {value}")


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Defaults, then config file keys, then explicit overrides."""
    data: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().strip()
        if raw:
            data = json.loads(raw)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    config = PipelineConfig(**data)
    validate_config(config)
    return config


def _read_lines(path: str | None, default_name: str) -> Iterable[str]:
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            return fh.readlines()
    text = (
        importlib_resources.files("ttekit")
        .joinpath("data", default_name)
        .read_text(encoding="utf-8")
    )
    return text.splitlines()


def _read_wordset(path: str | None, default_name: str) -> frozenset[str]:
    words = set()
    for line in _read_lines(path, default_name):
        word = line.strip().lower()
        if word and not word.startswith("#"):
            words.add(word)
    return frozenset(words)


@dataclass
class LoadedResources:
    lexicon: Lexicon
    grammar: list[GenerativeRule]
    patterns: CompiledPatternSet
    ruleset: RuleSet
    wordlist: frozenset[str]
    stoplist: frozenset[str]


def load_resources(config: PipelineConfig) -> LoadedResources:
    """Load lexicon, grammar, rules and word lists; compile the patterns.

    Paths absent from the config resolve to the sample resources shipped
    with the package.
    """
    lexicon = Lexicon.from_lines(_read_lines(config.lexicon_path, "lexicon.txt"))
    grammar = parse_grammar(_read_lines(config.grammar_path, "grammar.txt"))
    ruleset = parse_rules(_read_lines(config.rules_path, "rules.txt"))
    return LoadedResources(
        lexicon=lexicon,
        grammar=grammar,
        patterns=expand(lexicon, grammar),
        ruleset=ruleset,
        wordlist=_read_wordset(config.wordlist_path, "wordlist.txt"),
        stoplist=_read_wordset(config.stoplist_path, "stoplist.txt"),
    )
