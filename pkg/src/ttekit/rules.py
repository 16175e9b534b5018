"""Estimation rules: read a TTE directly from quantity expressions (Exact)
or compute it from an anchor time minus the posting time (Dynamic).

Rule files hold one rule per line:

    EXACT <template> UNIT=<factor>
    DYN <trigger> ANCHOR=<day-selector>@<HH:MM>

An EXACT template is a literal token sequence with an optional numeral
placeholder ``N``; the rule yields N * factor (factor alone when there
is no N). Factors may be fractions ("1/60"). A DYN trigger may contain
``<TIME>``; its anchor is ``today``, ``tomorrow`` or an English weekday
name, at a fixed time of day or at the matched clock time (``@TIME``).
All values are rounded to two decimals.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass
from datetime import datetime, time, timedelta
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .texpr import TIME_WILDCARD, ExprSpan, canonicalize, parse_clock_token

WEEKDAYS = (
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
)


class RuleFileError(Exception):
    """A rule file line cannot be parsed."""


@dataclass(frozen=True)
class ExactRule:
    template: tuple[str, ...]  # raw tokens, "N" marks the numeral slot
    factor: float

    def match(self, raw: Sequence[str]) -> float | None:
        if len(raw) != len(self.template):
            return None
        n = 1
        for want, got in zip(self.template, raw):
            if want == "N":
                if not got.isdigit():
                    return None
                n = int(got)
            elif want != got:
                return None
        return round(n * self.factor, 2)


@dataclass(frozen=True)
class DynamicRule:
    trigger: tuple[str, ...]  # canonical tokens, may contain <TIME>
    day_selector: str  # "today" | "tomorrow" | weekday name
    anchor_time: time | None  # None means "use the matched clock time"

    def match(self, canon: Sequence[str], posted_at: datetime) -> float | None:
        if len(canon) != len(self.trigger):
            return None
        clock: tuple[int, int] | None = None
        for want, got in zip(self.trigger, canon):
            if want == TIME_WILDCARD:
                clock = parse_clock_token(got)
                if clock is None:
                    return None
            elif want != got:
                return None
        if self.anchor_time is not None:
            at = self.anchor_time
        elif clock is not None:
            at = time(clock[0], clock[1])
        else:
            return None
        anchor = resolve_anchor(self.day_selector, at, posted_at)
        return round((anchor - posted_at).total_seconds() / 3600.0, 2)


def resolve_anchor(day_selector: str, at: time, posted_at: datetime) -> datetime:
    """Anchor timestamp for a day selector and time of day.

    "today"/"tomorrow" are fixed offsets and may land before posted_at;
    a weekday resolves to its next occurrence, rolling a full week ahead
    when today's anchor time has already passed.
    """
    base = posted_at.replace(hour=at.hour, minute=at.minute, second=0, microsecond=0)
    if day_selector == "today":
        return base
    if day_selector == "tomorrow":
        return base + timedelta(days=1)
    target = WEEKDAYS.index(day_selector)
    ahead = (target - posted_at.weekday()) % 7
    anchor = base + timedelta(days=ahead)
    if anchor < posted_at:
        anchor += timedelta(days=7)
    return anchor


@dataclass(frozen=True)
class RuleMatch:
    span: ExprSpan
    value_hours: float


@dataclass(frozen=True)
class RuleSet:
    exact: tuple[ExactRule, ...]
    dynamic: tuple[DynamicRule, ...]

    def apply_exact(self, span: ExprSpan) -> float | None:
        raw = span.raw
        for rule in self.exact:
            value = rule.match(raw)
            if value is not None:
                return value
        return None

    def apply_dynamic(self, span: ExprSpan, posted_at: datetime) -> float | None:
        canon = span.canon or tuple(canonicalize(span.raw)[0])
        for rule in self.dynamic:
            value = rule.match(canon, posted_at)
            if value is not None:
                return value
        return None

    def rule_estimate(
        self,
        spans: Sequence[ExprSpan],
        posted_at: datetime,
        clamp_nonnegative: bool = True,
    ) -> tuple[float, list[RuleMatch]] | None:
        """Mean of every rule value matched in the tweet, or None.

        Individual anchor values may be negative (the anchor already
        passed); the per-tweet mean is clamped at 0.00 unless disabled.
        """
        matches: list[RuleMatch] = []
        for span in spans:
            value = self.apply_exact(span)
            if value is not None:
                matches.append(RuleMatch(span, value))
            value = self.apply_dynamic(span, posted_at)
            if value is not None:
                matches.append(RuleMatch(span, value))
        if not matches:
            return None
        estimate = round(statistics.fmean(m.value_hours for m in matches), 2)
        if clamp_nonnegative and estimate < 0.0:
            estimate = 0.0
        return estimate, matches


_FACTOR_RE = re.compile(r"^(\d+)(?:/(\d+))?$|^(\d*\.\d+)$")
_ANCHOR_RE = re.compile(r"^(\w+)@(TIME|\d{1,2}:\d{2})$")


def _parse_factor(text: str) -> float:
    m = _FACTOR_RE.match(text)
    if not m:
        raise RuleFileError(f"bad UNIT factor {text!r}")
    if m.group(3) is not None:
        return float(m.group(3))
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise RuleFileError("zero denominator in UNIT factor")
    return float(Fraction(num, den))


def parse_rules(lines: Iterable[str]) -> RuleSet:
    exact: list[ExactRule] = []
    dynamic: list[DynamicRule] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "EXACT":
            body, sep, factor = rest.rpartition(" UNIT=")
            if not sep or not body:
                raise RuleFileError(f"line {lineno}: EXACT needs a UNIT= factor")
            value = _parse_factor(factor.strip())
            if value <= 0:
                raise RuleFileError(f"line {lineno}: UNIT factor must be positive")
            exact.append(ExactRule(tuple(body.split()), value))
        elif head == "DYN":
            body, sep, anchor = rest.rpartition(" ANCHOR=")
            if not sep or not body:
                raise RuleFileError(f"line {lineno}: DYN needs an ANCHOR= spec")
            m = _ANCHOR_RE.match(anchor.strip())
            if not m:
                raise RuleFileError(f"line {lineno}: bad ANCHOR spec {anchor!r}")
            selector = m.group(1).lower()
            if selector not in WEEKDAYS and selector not in ("today", "tomorrow"):
                raise RuleFileError(f"line {lineno}: unknown day selector {selector!r}")
            if m.group(2) == "TIME":
                at = None
            else:
                hh, mm = m.group(2).split(":")
                if not (0 <= int(hh) <= 23 and 0 <= int(mm) <= 59):
                    raise RuleFileError(f"line {lineno}: bad anchor time {m.group(2)!r}")
                at = time(int(hh), int(mm))
            trigger = tuple(canonicalize(body.split())[0])
            dynamic.append(DynamicRule(trigger, selector, at))
        else:
            raise RuleFileError(f"line {lineno}: rule must start with EXACT or DYN")
    return RuleSet(tuple(exact), tuple(dynamic))


def load_rules(path: str | Path) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh)
