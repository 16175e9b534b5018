"""Load, normalize, filter, and label event-linked tweet collections.

Input is two JSON-lines files: one tweet record per line with fields
``id``, ``text``, ``created_at`` (ISO-8601) and ``event_id``, plus an
event manifest with ``event_id``, ``hashtag`` and ``start_time``. Every
kept tweet is labeled with its actual time to event in fractional hours
and with the position of the event hashtag in the text.
"""

from __future__ import annotations

import enum
import json
import string
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

_PUNCT = string.punctuation


class DataError(Exception):
    """A data file cannot be used at all (unreadable, not JSON-lines)."""


class HashtagPosition(enum.Enum):
    FIN = "fin"
    NFI = "nfi"
    ABSENT = "absent"


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str  # normalized lowercase
    posted_at: datetime  # UTC
    event_id: str


@dataclass(frozen=True)
class Event:
    event_id: str
    hashtag: str  # with leading '#'
    start_time: datetime  # UTC


@dataclass(frozen=True)
class LabeledTweet:
    tweet: Tweet
    tte_hours: float
    hashtag_position: HashtagPosition


@dataclass(frozen=True)
class RecordError:
    index: int  # 0-based line / record position
    message: str


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace runs to single spaces, strip ends."""
    return " ".join(text.lower().split())


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with punctuation stripped from token edges.

    Interior punctuation survives, which keeps clock times ("14.30",
    "20:45") intact while shedding sentence punctuation and '#'/'@'
    markers.
    """
    out = []
    for raw in normalize(text).split(" "):
        tok = raw.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


def is_retweet(text: str) -> bool:
    """True iff the normalized text carries the "rt @" retweet marker.

    The marker must start a token ("start @ 3pm" is not a retweet).
    """
    return text.startswith("rt @") or " rt @" in text


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _load_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            yield i, line


def load_tweets(path: str | Path) -> tuple[list[Tweet], list[RecordError]]:
    """Read a JSON-lines tweet file, in file order.

    Malformed records are returned as error entries with their line
    index rather than silently dropped.
    """
    tweets: list[Tweet] = []
    errors: list[RecordError] = []
    for i, line in _load_jsonl(path):
        try:
            obj = json.loads(line)
            text = normalize(str(obj["text"]))
            if not text:
                raise ValueError("empty text after normalization")
            tweets.append(
                Tweet(
                    id=str(obj["id"]),
                    text=text,
                    posted_at=parse_timestamp(str(obj["created_at"])),
                    event_id=str(obj["event_id"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(RecordError(i, f"bad tweet record: {exc}"))
    return tweets, errors


def load_events(path: str | Path) -> tuple[list[Event], list[RecordError]]:
    events: list[Event] = []
    errors: list[RecordError] = []
    for i, line in _load_jsonl(path):
        try:
            obj = json.loads(line)
            hashtag = str(obj["hashtag"]).lower()
            if not hashtag.startswith("#"):
                hashtag = "#" + hashtag
            events.append(
                Event(
                    event_id=str(obj["event_id"]),
                    hashtag=hashtag,
                    start_time=parse_timestamp(str(obj["start_time"])),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(RecordError(i, f"bad event record: {exc}"))
    return events, errors


def _is_hashtag(token: str) -> bool:
    return token.startswith("#") and len(token) > 1


def _token_matches_hashtag(token: str, hashtag: str) -> bool:
    # allow trailing punctuation on the token ("#utrfey!")
    return token == hashtag or (
        token.startswith(hashtag) and not token[len(hashtag) :].strip(_PUNCT)
    )


def hashtag_position(text: str, hashtag: str) -> HashtagPosition:
    """FIN iff the event hashtag is tweet-final or followed only by hashtags.

    Multiple occurrences are judged by the last one.
    """
    raw = normalize(text).split(" ")
    last = -1
    for i, tok in enumerate(raw):
        if _token_matches_hashtag(tok, hashtag):
            last = i
    if last < 0:
        return HashtagPosition.ABSENT
    if all(_is_hashtag(tok) for tok in raw[last + 1 :]):
        return HashtagPosition.FIN
    return HashtagPosition.NFI


def label_and_window(
    tweets: Sequence[Tweet],
    events: Sequence[Event],
    window_hours: float = 192.0,
    remove_retweets: bool = True,
) -> tuple[list[LabeledTweet], list[RecordError]]:
    """Label tweets with actual TTE and keep those inside the window.

    Keeps tweets with 0 <= tte_hours <= window_hours. Tweets pointing at
    an unknown event are reported, not dropped silently.
    """
    if window_hours <= 0:
        raise ValueError("window_hours must be positive")
    by_id = {ev.event_id: ev for ev in events}
    kept: list[LabeledTweet] = []
    errors: list[RecordError] = []
    for i, tw in enumerate(tweets):
        ev = by_id.get(tw.event_id)
        if ev is None:
            errors.append(RecordError(i, f"unknown event_id {tw.event_id!r}"))
            continue
        if remove_retweets and is_retweet(tw.text):
            continue
        tte = (ev.start_time - tw.posted_at).total_seconds() / 3600.0
        if not 0.0 <= tte <= window_hours:
            continue
        kept.append(
            LabeledTweet(
                tweet=tw,
                tte_hours=tte,
                hashtag_position=hashtag_position(tw.text, ev.hashtag),
            )
        )
    return kept, errors


def group_by_event(labeled: Iterable[LabeledTweet]) -> dict[str, list[LabeledTweet]]:
    """Group labeled tweets per event, each list chronological."""
    groups: dict[str, list[LabeledTweet]] = {}
    for lt in labeled:
        groups.setdefault(lt.tweet.event_id, []).append(lt)
    for items in groups.values():
        items.sort(key=lambda lt: lt.tweet.posted_at)
    return groups
