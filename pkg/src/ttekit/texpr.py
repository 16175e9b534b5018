"""Temporal expression patterns: expansion, longest-match extraction, skipgrams.

A pattern set is compiled from a lexicon (one surface expression per
line) plus generative rules. A rule is a line of slots separated by
" + ":

    ``[a | b]``    mandatory alternatives (each may span several words)
    ``(a | b)``    optional alternatives
    ``N{lo..hi}``  a numeral slot expanded to every integer in [lo, hi]
    ``word``       a single literal
    ``<TIME>``     matches any clock-time occurrence

Clock times come in many notations ("3:00", "3.00 uur", "3 u", "20:45").
A small recognizer rewrites such token runs into one synthetic token
``<tHH:MM>`` on both the pattern side and the input side, so every
notation variant lands on the same trie path. Extraction is a greedy
left-to-right scan; at each position the longest matching pattern wins
and the scan resumes after it.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import normalize, tokenize

NUMERAL_MAX = 120
TIME_WILDCARD = "<TIME>"

_CLOCK_RE = re.compile(r"^([01]?\d|2[0-3])[:.]([0-5]\d)$")
_HOUR_RE = re.compile(r"^([01]?\d|2[0-3])$")
_HOUR_WORDS = frozenset({"u", "uur"})
_SYNTH_RE = re.compile(r"^<t(\d{2}):(\d{2})>$")


class GrammarError(Exception):
    """A generative rule file is malformed or out of range."""


def clock_at(tokens: Sequence[str], i: int) -> tuple[int, str] | None:
    """Clock time starting at position ``i``: (tokens consumed, synthetic token).

    Recognized forms: ``HH:MM`` / ``HH.MM`` (optionally followed by
    "uur"/"u"), and a bare hour followed by "uur"/"u".
    """
    tok = tokens[i]
    m = _CLOCK_RE.match(tok)
    if m:
        length = 1
        if i + 1 < len(tokens) and tokens[i + 1] in _HOUR_WORDS:
            length = 2
        return length, f"<t{int(m.group(1)):02d}:{m.group(2)}>"
    m = _HOUR_RE.match(tok)
    if m and i + 1 < len(tokens) and tokens[i + 1] in _HOUR_WORDS:
        return 2, f"<t{int(m.group(1)):02d}:00>"
    return None


def parse_clock_token(token: str) -> tuple[int, int] | None:
    """(hour, minute) for a synthetic ``<tHH:MM>`` token, else None."""
    m = _SYNTH_RE.match(token)
    if m:
        return int(m.group(1)), int(m.group(2))
    return None


def canonicalize(tokens: Sequence[str]) -> tuple[list[str], list[int], list[int]]:
    """Rewrite clock-time runs into synthetic tokens.

    Returns (canonical tokens, start index of each in the raw sequence,
    raw tokens consumed by each).
    """
    canon: list[str] = []
    starts: list[int] = []
    lens: list[int] = []
    i = 0
    n = len(tokens)
    while i < n:
        hit = clock_at(tokens, i)
        if hit:
            length, tok = hit
        else:
            length, tok = 1, tokens[i]
        canon.append(tok)
        starts.append(i)
        lens.append(length)
        i += length
    return canon, starts, lens


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[str, ...]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Lexicon":
        seen: dict[str, None] = {}
        for line in lines:
            entry = normalize(line)
            if entry and not entry.startswith("#"):
                seen.setdefault(entry, None)
        return cls(tuple(seen))

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


@dataclass(frozen=True)
class Slot:
    alternatives: tuple[tuple[str, ...], ...]
    optional: bool = False


@dataclass(frozen=True)
class GenerativeRule:
    slots: tuple[Slot, ...]

    def expansion_count(self) -> int:
        count = 1
        for slot in self.slots:
            count *= len(slot.alternatives) + (1 if slot.optional else 0)
        return count


_NUMERAL_SLOT_RE = re.compile(r"^N\{(\d+)\.\.(\d+)\}$")


def _parse_slot(spec: str) -> Slot:
    spec = spec.strip()
    if not spec:
        raise GrammarError("empty slot")
    m = _NUMERAL_SLOT_RE.match(spec)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if not 1 <= lo <= hi <= NUMERAL_MAX:
            raise GrammarError(
                f"numeral range {lo}..{hi} outside [1, {NUMERAL_MAX}]"
            )
        return Slot(tuple((str(n),) for n in range(lo, hi + 1)))
    optional = False
    if spec.startswith("(") and spec.endswith(")"):
        optional = True
        spec = spec[1:-1].strip()
    elif spec.startswith("[") and spec.endswith("]"):
        spec = spec[1:-1].strip()
    alts = []
    for alt in spec.split("|"):
        words = tuple(alt.split())
        if not words:
            raise GrammarError(f"empty alternative in slot {spec!r}")
        alts.append(words)
    return Slot(tuple(alts), optional=optional)


def parse_grammar(lines: Iterable[str]) -> list[GenerativeRule]:
    rules = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        slots = tuple(_parse_slot(part) for part in line.split(" + "))
        rules.append(GenerativeRule(slots))
    return rules


def load_grammar(path: str | Path) -> list[GenerativeRule]:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh)


class _TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.terminal = False


@dataclass
class CompiledPatternSet:
    """Expanded pattern list plus the trie used for matching.

    ``patterns`` holds the deduplicated raw token sequences;
    ``generated_count`` is the pre-dedup expansion size.
    """

    patterns: list[tuple[str, ...]]
    max_pattern_len: int
    generated_count: int
    _root: _TrieNode = field(repr=False, default_factory=_TrieNode)

    def __len__(self) -> int:
        return len(self.patterns)


def expand(lexicon: Lexicon, rules: Sequence[GenerativeRule]) -> CompiledPatternSet:
    """Expand lexicon plus rules into a compiled, trie-backed pattern set."""
    seen: dict[tuple[str, ...], None] = {}
    generated = 0
    for entry in lexicon.entries:
        generated += 1
        seen.setdefault(tuple(entry.split(" ")), None)
    for rule in rules:
        choice_lists = []
        for slot in rule.slots:
            choices = list(slot.alternatives)
            if slot.optional:
                choices.append(())
            choice_lists.append(choices)
        for combo in itertools.product(*choice_lists):
            generated += 1
            pattern = tuple(itertools.chain.from_iterable(combo))
            if pattern:
                seen.setdefault(pattern, None)
    patterns = list(seen)
    root = _TrieNode()
    max_len = 0
    for pattern in patterns:
        canon, _, _ = canonicalize(pattern)
        max_len = max(max_len, len(pattern))
        node = root
        for tok in canon:
            node = node.children.setdefault(tok, _TrieNode())
        node.terminal = True
    return CompiledPatternSet(
        patterns=patterns,
        max_pattern_len=max_len,
        generated_count=generated,
        _root=root,
    )


@dataclass(frozen=True)
class ExprSpan:
    start_token: int
    end_token: int  # exclusive, raw token index
    surface: str
    canon: tuple[str, ...] = ()

    @property
    def raw(self) -> tuple[str, ...]:
        return tuple(self.surface.split(" "))


def _longest_from(node: _TrieNode, canon: Sequence[str], j: int) -> int:
    """Length (in canonical tokens) of the longest match starting at j, or 0."""
    best = 0
    depth = 0
    stack = [(node, j, 0)]
    while stack:
        cur, pos, depth = stack.pop()
        if cur.terminal and depth > best:
            best = depth
        if pos >= len(canon):
            continue
        tok = canon[pos]
        child = cur.children.get(tok)
        if child is not None:
            stack.append((child, pos + 1, depth + 1))
        if tok.startswith("<t"):
            wild = cur.children.get(TIME_WILDCARD)
            if wild is not None:
                stack.append((wild, pos + 1, depth + 1))
    return best


def extract(tokens: Sequence[str], patterns: CompiledPatternSet) -> list[ExprSpan]:
    """Greedy longest-match scan, left to right, non-overlapping spans."""
    canon, starts, lens = canonicalize(tokens)
    spans: list[ExprSpan] = []
    j = 0
    n = len(canon)
    while j < n:
        matched = _longest_from(patterns._root, canon, j)
        if matched:
            start = starts[j]
            last = j + matched - 1
            end = starts[last] + lens[last]
            spans.append(
                ExprSpan(
                    start_token=start,
                    end_token=end,
                    surface=" ".join(tokens[start:end]),
                    canon=tuple(canon[j : j + matched]),
                )
            )
            j += matched
        else:
            j += 1
    return spans


def extract_text(text: str, patterns: CompiledPatternSet) -> list[ExprSpan]:
    return extract(tokenize(text), patterns)


def tfeat_skipgrams(spans: Sequence[ExprSpan], n: int) -> list[str]:
    """Order-preserving combinations of 1..n spans, joined by ", ".

    In-between tokens are ignored; for m spans and n=2 this yields
    m + m*(m-1)/2 keys.
    """
    if not 1 <= n <= 7:
        raise ValueError("skipgram length must be in [1, 7]")
    keys: list[str] = []
    for k in range(1, min(n, len(spans)) + 1):
        for combo in itertools.combinations(spans, k):
            keys.append(", ".join(s.surface for s in combo))
    return keys


def expected_expansion_count(
    lexicon: Lexicon, rules: Sequence[GenerativeRule]
) -> int:
    """Pre-dedup pattern count implied by the grammar shape."""
    return len(lexicon.entries) + sum(r.expansion_count() for r in rules)


def skipgram_count(m: int, n: int) -> int:
    """Number of skipgrams over m items with lengths 1..n."""
    return sum(math.comb(m, k) for k in range(1, min(m, n) + 1))
