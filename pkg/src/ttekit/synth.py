"""Deterministic synthetic corpora for exercising the full pipeline.

Events get random (but seed-fixed) start times; tweet TTEs follow a
truncated exponential, mimicking the pile-up of posts shortly before an
event. Three cue families are injected independently per tweet:

* exact expressions "over N uur" with N equal to the rounded true TTE,
* a weekday-plus-clock expression naming the event's actual start,
* phase words whose identity encodes a coarse TTE band.

Remaining tokens are filler words (in the word list) and junk words
(not in it), so some tweets carry no usable cue at all.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .corpus import Event, LabeledTweet, Tweet, label_and_window

WEEKDAY_NAMES_NL = (
    "maandag",
    "dinsdag",
    "woensdag",
    "donderdag",
    "vrijdag",
    "zaterdag",
    "zondag",
)

BAND_HOURS = 8.0  # width of one phase-word TTE band


class SynthSpecError(Exception):
    pass


@dataclass(frozen=True)
class SynthSpec:
    n_events: int = 50
    tweets_per_event: int = 200
    seed: int = 7
    frac_exact: float = 0.30
    frac_dynamic: float = 0.10
    frac_word: float = 0.60
    tte_lo: float = 0.6
    tte_hi: float = 119.4
    tte_mean: float = 18.0
    n_filler_words: int = 120
    n_junk_words: int = 80

    def __post_init__(self) -> None:
        if self.n_events < 1 or self.tweets_per_event < 1:
            raise SynthSpecError("event and tweet counts must be positive")
        for name in ("frac_exact", "frac_dynamic", "frac_word"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SynthSpecError(f"{name} must be in [0, 1]: got {value}")
        if not 0.0 <= self.tte_lo < self.tte_hi:
            raise SynthSpecError("need 0 <= tte_lo < tte_hi")
        if self.tte_hi > 168.0 and self.frac_dynamic > 0.0:
            raise SynthSpecError(
                "dynamic cues resolve to the next weekday occurrence; "
                "tte_hi must stay under 168 hours when frac_dynamic > 0"
            )
        if self.tte_mean <= 0.0:
            raise SynthSpecError("tte_mean must be positive")


@dataclass
class SynthCorpus:
    spec: SynthSpec
    tweets: list[Tweet]
    events: list[Event]
    wordlist: frozenset[str]
    stoplist: frozenset[str]

    def labeled(self, window_hours: float = 192.0) -> list[LabeledTweet]:
        labeled, errors = label_and_window(self.tweets, self.events, window_hours)
        assert not errors
        return labeled

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        """Write tweets.jsonl, events.jsonl, wordlist.txt, stoplist.txt."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "tweets": out / "tweets.jsonl",
            "events": out / "events.jsonl",
            "wordlist": out / "wordlist.txt",
            "stoplist": out / "stoplist.txt",
        }
        with open(paths["tweets"], "w", encoding="utf-8") as fh:
            for tw in self.tweets:
                fh.write(
                    json.dumps(
                        {
                            "id": tw.id,
                            "text": tw.text,
                            "created_at": tw.posted_at.isoformat(),
                            "event_id": tw.event_id,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        with open(paths["events"], "w", encoding="utf-8") as fh:
            for ev in self.events:
                fh.write(
                    json.dumps(
                        {
                            "event_id": ev.event_id,
                            "hashtag": ev.hashtag,
                            "start_time": ev.start_time.isoformat(),
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        paths["wordlist"].write_text("\n".join(sorted(self.wordlist)) + "\n")
        paths["stoplist"].write_text("\n".join(sorted(self.stoplist)) + "\n")
        return paths


def _truncated_exp(rng: random.Random, lo: float, hi: float, mean: float) -> float:
    span = hi - lo
    c = 1.0 - math.exp(-span / mean)
    return lo - mean * math.log(1.0 - rng.random() * c)


def band_word(tte_hours: float) -> str:
    return f"fase{int(tte_hours // BAND_HOURS):02d}"


def synthesize(spec: SynthSpec) -> SynthCorpus:
    rng = random.Random(spec.seed)
    fillers = [f"vul{i:03d}" for i in range(spec.n_filler_words)]
    junk = [f"qx{i:03d}" for i in range(spec.n_junk_words)]
    n_bands = int(spec.tte_hi // BAND_HOURS) + 1
    wordlist = frozenset(fillers) | {f"fase{i:02d}" for i in range(n_bands)}
    stoplist = frozenset(fillers[:2])
    base = datetime(2012, 3, 1, tzinfo=timezone.utc)

    events: list[Event] = []
    tweets: list[Tweet] = []
    m = spec.tweets_per_event
    for e in range(spec.n_events):
        start = base + timedelta(
            days=rng.randrange(0, 360),
            hours=rng.randrange(8, 23),
            minutes=rng.choice((0, 15, 30, 45)),
        )
        event_id = f"ev{e:03d}"
        events.append(Event(event_id, f"#{event_id}", start))
        exact_set = set(rng.sample(range(m), round(spec.frac_exact * m)))
        dyn_set = set(rng.sample(range(m), round(spec.frac_dynamic * m)))
        word_set = set(rng.sample(range(m), round(spec.frac_word * m)))
        for i in range(m):
            tau = _truncated_exp(rng, spec.tte_lo, spec.tte_hi, spec.tte_mean)
            posted = start - timedelta(seconds=round(tau * 3600.0))
            tau = (start - posted).total_seconds() / 3600.0
            parts: list[str] = [rng.choice(fillers)]
            if i in exact_set:
                parts.append(f"over {round(tau)} uur")
            if i in dyn_set:
                parts.append(
                    f"{WEEKDAY_NAMES_NL[start.weekday()]} om "
                    f"{start.hour}.{start.minute:02d}"
                )
            if i in word_set:
                parts.append(band_word(tau))
                if rng.random() < 0.5:
                    parts.append(rng.choice(fillers))
            parts.append(rng.choice(junk))
            parts.append(rng.choice(fillers))
            text = " ".join(parts) + f" #{event_id}"
            tweets.append(Tweet(f"t{e:03d}x{i:05d}", text, posted, event_id))
    return SynthCorpus(spec, tweets, events, wordlist, stoplist)
