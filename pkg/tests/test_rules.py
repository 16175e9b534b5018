from datetime import datetime, timedelta, timezone

import pytest

from ttekit.rules import RuleFileError, parse_rules, resolve_anchor
from ttekit.texpr import ExprSpan, extract_text

UTC = timezone.utc


def span_of(text):
    """Hand-built span over the whole text (canon filled lazily)."""
    tokens = text.split()
    return ExprSpan(0, len(tokens), text)


def ts(spec):
    return datetime.fromisoformat(spec).replace(tzinfo=UTC)


class TestExactRules:
    def test_over_n_uur(self, ruleset):
        assert ruleset.apply_exact(span_of("over 2 uur")) == 2.00

    def test_nog_minder_dan_1_u(self, ruleset):
        assert ruleset.apply_exact(span_of("nog minder dan 1 u")) == 1.00

    def test_over_45_minuten(self, ruleset):
        # 45 * (1/60) by hand
        assert ruleset.apply_exact(span_of("over 45 minuten")) == 0.75

    def test_written_numeral(self, ruleset):
        assert ruleset.apply_exact(span_of("over een kwartier")) == 0.25

    def test_no_match(self, ruleset):
        assert ruleset.apply_exact(span_of("in het weekend")) is None

    def test_identity_over_numeral_range(self, ruleset):
        for n in range(1, 121):
            assert ruleset.apply_exact(span_of(f"over {n} uur")) == float(n)

    def test_two_decimal_rounding(self, ruleset):
        # 7 minutes = 0.11666... -> 0.12
        assert ruleset.apply_exact(span_of("over 7 minuten")) == 0.12


class TestDynamicRules:
    def test_vandaag_at_noon(self, ruleset):
        # anchor today 15:00 minus posting time
        value = ruleset.apply_dynamic(span_of("vandaag"), ts("2012-03-09T12:00:00"))
        assert value == 3.00

    def test_vanavond_at_anchor(self, ruleset):
        value = ruleset.apply_dynamic(span_of("vanavond"), ts("2012-03-09T20:00:00"))
        assert value == 0.00

    def test_weekday_friday_to_sunday(self, ruleset):
        # 2012-03-09 is a Friday; Sunday 15:00 is 48h after Friday 15:00
        value = ruleset.apply_dynamic(span_of("zondag"), ts("2012-03-09T15:00:00"))
        assert value == 48.00

    def test_same_weekday_passed_rolls_a_week(self, ruleset):
        # Friday posting after the Friday anchor time
        value = ruleset.apply_dynamic(span_of("vrijdag"), ts("2012-03-09T16:00:00"))
        assert value == (7 * 24.0) - 1.0

    def test_same_weekday_before_anchor_stays(self, ruleset):
        value = ruleset.apply_dynamic(span_of("vrijdag"), ts("2012-03-09T14:00:00"))
        assert value == 1.00

    def test_clock_anchor_from_match(self, ruleset):
        value = ruleset.apply_dynamic(span_of("om 16.30"), ts("2012-03-09T15:12:00"))
        assert value == 1.30

    def test_today_anchor_can_go_negative(self, ruleset):
        value = ruleset.apply_dynamic(span_of("vandaag"), ts("2012-03-09T18:00:00"))
        assert value == -3.00

    def test_translation_consistency_same_day(self, ruleset):
        # shifting the posting time one hour later lowers the value by 1.00
        early = ruleset.apply_dynamic(span_of("vanavond"), ts("2012-03-09T10:00:00"))
        late = ruleset.apply_dynamic(span_of("vanavond"), ts("2012-03-09T11:00:00"))
        assert early - late == pytest.approx(1.00)

    def test_weekday_scope_bounded_by_eight_days(self, ruleset):
        posted = ts("2012-03-05T00:00:00")
        for day in range(7):
            for trigger in ("maandag", "woensdag", "zondag"):
                value = ruleset.apply_dynamic(
                    span_of(trigger), posted + timedelta(days=day, minutes=17)
                )
                assert value is not None and value <= 192.00


class TestRuleEstimate:
    def test_mean_of_two(self, ruleset):
        spans = [span_of("over 2 uur"), span_of("over 4 uur")]
        value, matches = ruleset.rule_estimate(spans, ts("2012-03-09T12:00:00"))
        assert value == 3.00
        assert sorted(m.value_hours for m in matches) == [2.00, 4.00]

    def test_no_matches(self, ruleset):
        assert ruleset.rule_estimate([span_of("in het weekend")], ts("2012-03-09T12:00:00")) is None

    def test_hand_mean(self, ruleset):
        # 0.75, 3.00 and 48.00 average to 17.25
        spans = [span_of("over 45 minuten"), span_of("over 3 uur")]
        posted = ts("2012-03-09T15:00:00")  # Friday -> zondag = 48.00
        spans.append(span_of("zondag"))
        value, matches = ruleset.rule_estimate(spans, posted)
        assert sorted(m.value_hours for m in matches) == [0.75, 3.00, 48.00]
        assert value == 17.25

    def test_negative_mean_clamped(self, ruleset):
        value, matches = ruleset.rule_estimate(
            [span_of("vandaag")], ts("2012-03-09T18:00:00")
        )
        assert matches[0].value_hours == -3.00  # kept in the match
        assert value == 0.00

    def test_clamp_can_be_disabled(self, ruleset):
        value, _ = ruleset.rule_estimate(
            [span_of("vandaag")], ts("2012-03-09T18:00:00"), clamp_nonnegative=False
        )
        assert value == -3.00

    def test_values_carry_two_decimals(self, ruleset):
        posted = ts("2012-03-09T13:37:23")
        for text in ("over 7 minuten", "vandaag", "om 16.30", "zondag"):
            result = ruleset.rule_estimate([span_of(text)], posted)
            assert result is not None
            value, matches = result
            assert value == round(value, 2)
            for m in matches:
                assert m.value_hours == round(m.value_hours, 2)


class TestExtractionToRules:
    """Spans produced by the extractor drive the rules directly."""

    def test_extracted_exact(self, patterns, ruleset):
        spans = extract_text("yes over 2 uur begint het", patterns)
        value, _ = ruleset.rule_estimate(spans, ts("2012-03-09T12:00:00"))
        assert value == 2.00

    def test_extracted_clock_variant(self, patterns, ruleset):
        # "om 14:30" and "om 14.30 uur" land on the same rule
        posted = ts("2012-03-09T12:00:00")
        values = set()
        for text in ("om 14:30", "om 14.30 uur", "om 14.30"):
            spans = extract_text(text, patterns)
            value, _ = ruleset.rule_estimate(spans, posted)
            values.add(value)
        assert values == {2.50}


class TestRuleFileParsing:
    def test_exact_requires_unit(self):
        with pytest.raises(RuleFileError):
            parse_rules(["EXACT over N uur"])

    def test_dyn_requires_anchor(self):
        with pytest.raises(RuleFileError):
            parse_rules(["DYN vandaag"])

    def test_bad_day_selector(self):
        with pytest.raises(RuleFileError):
            parse_rules(["DYN ooit ANCHOR=someday@15:00"])

    def test_fraction_factor(self):
        ruleset = parse_rules(["EXACT over N minuten UNIT=1/60"])
        assert ruleset.apply_exact(span_of("over 30 minuten")) == 0.50

    def test_comment_and_blank_lines(self):
        ruleset = parse_rules(["# comment", "", "EXACT over N uur UNIT=1"])
        assert len(ruleset.exact) == 1


class TestResolveAnchorOracle:
    """Calendar arithmetic against a day-scan oracle."""

    def _oracle(self, selector, at, posted):
        from datetime import time as time_of_day

        if selector == "today":
            days = [0]
        elif selector == "tomorrow":
            days = [1]
        else:
            names = [
                "monday",
                "tuesday",
                "wednesday",
                "thursday",
                "friday",
                "saturday",
                "sunday",
            ]
            days = [
                d
                for d in range(8)
                if names[(posted + timedelta(days=d)).weekday()] == selector
            ]
        for d in days:
            candidate = (posted + timedelta(days=d)).replace(
                hour=at.hour, minute=at.minute, second=0, microsecond=0
            )
            if selector in ("today", "tomorrow") or candidate >= posted:
                return candidate
        raise AssertionError("oracle found no anchor")

    def test_agreement(self):
        import random
        from datetime import time as time_of_day

        rng = random.Random(11)
        selectors = ["today", "tomorrow", "monday", "thursday", "sunday"]
        for _ in range(500):
            selector = rng.choice(selectors)
            at = time_of_day(rng.randrange(24), rng.randrange(60))
            posted = ts("2012-01-01T00:00:00") + timedelta(
                days=rng.randrange(400),
                hours=rng.randrange(24),
                minutes=rng.randrange(60),
                seconds=rng.randrange(60),
            )
            assert resolve_anchor(selector, at, posted) == self._oracle(
                selector, at, posted
            )
