"""Evaluators for text presence, text absence, reading order, and the
per-page baseline sanity check.

All of them reduce to one primitive: the minimum edit distance between a
needle and any substring of a haystack ("substring edit distance", where
skipping haystack characters before and after the match is free).  A test
passes or fails by comparing that distance against an explicit fuzz budget
(``max_diffs``), optionally restricted to the first or last N characters
of the document.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Optional

import numpy as np

from lineval.normalize import NormalizedText

__all__ = [
    "MatchResult",
    "fuzzy_find",
    "fuzzy_locate",
    "default_max_diffs",
    "check_presence",
    "check_absence",
    "check_order",
    "check_baseline",
    "find_trailing_repetition",
]


@dataclass(frozen=True)
class MatchResult:
    """Outcome of one check: pass/fail plus enough detail to debug it."""

    passed: bool
    best_distance: Optional[int] = None
    location: Optional[int] = None
    explanation: str = ""


def _text_of(s: str | NormalizedText) -> str:
    return s.value if isinstance(s, NormalizedText) else s


def _codepoints(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def _substring_distance_row(needle: np.ndarray, haystack: np.ndarray) -> np.ndarray:
    """Final DP row of the substring edit distance.

    ``row[j]`` is the minimum edit distance between the full needle and
    any substring of the haystack ending at position ``j``.  Row updates
    are vectorized over the haystack axis; the left-neighbor dependency
    ``row[j-1] + 1`` is resolved with a running minimum of
    ``candidate[j] - j`` (each step left adds exactly one deletion, so
    the chain minimum telescopes).
    """
    m = haystack.shape[0]
    offsets = np.arange(m + 1, dtype=np.int32)
    row = np.zeros(m + 1, dtype=np.int32)
    for i, ch in enumerate(needle, start=1):
        cost = (haystack != ch).astype(np.int32)
        cand = np.empty(m + 1, dtype=np.int32)
        cand[0] = i
        np.minimum(row[1:] + 1, row[:-1] + cost, out=cand[1:])
        row = np.minimum.accumulate(cand - offsets) + offsets
    return row


def _best_match(needle: str, haystack: str) -> tuple[int, list[int]]:
    """Best substring edit distance and every optimal match start offset.

    Start offsets come from running the same DP on the reversed strings:
    an optimal window *ending* at reversed position ``j`` is an optimal
    window *starting* at ``len(haystack) - j``.
    """
    if not haystack:
        return len(needle), [0]
    n_codes = _codepoints(needle)
    h_codes = _codepoints(haystack)
    best = int(_substring_distance_row(n_codes, h_codes).min())
    rev = _substring_distance_row(n_codes[::-1], h_codes[::-1])
    m = len(h_codes)
    starts = [int(m - j) for j in np.flatnonzero(rev == best)]
    starts.sort()
    return best, starts


def default_max_diffs(needle: str | NormalizedText) -> int:
    """Fuzz budget used when a test does not set one: 10% of needle length."""
    return len(_text_of(needle)) // 10


def _window(
    haystack: str, first_n: Optional[int], last_n: Optional[int]
) -> tuple[str, int]:
    """Restrict the searchable region; returns (region, offset in full text)."""
    start, end = 0, len(haystack)
    if first_n is not None:
        end = min(end, first_n)
    if last_n is not None:
        start = max(start, len(haystack) - last_n)
    if start >= end:
        return "", start
    return haystack[start:end], start


def fuzzy_locate(
    needle: str | NormalizedText,
    haystack: str | NormalizedText,
    max_diffs: int,
    first_n: Optional[int] = None,
    last_n: Optional[int] = None,
    case_sensitive: bool = True,
) -> tuple[int, list[int]]:
    """Like :func:`fuzzy_find` but returns (best_distance, all optimal starts).

    Offsets are relative to the full haystack even when a first_n/last_n
    window restricts the search.
    """
    needle = _text_of(needle)
    haystack = _text_of(haystack)
    if not needle:
        raise ValueError("needle must be non-empty")
    if max_diffs < 0:
        raise ValueError("max_diffs must be >= 0")
    region, offset = _window(haystack, first_n, last_n)
    if not case_sensitive:
        # lower() rather than casefold(): offsets must stay aligned with
        # the original text, so the mapping has to preserve length.
        needle = needle.lower()
        region = region.lower()
    if not region:
        return len(needle), []
    best, starts = _best_match(needle, region)
    return best, [s + offset for s in starts]


def fuzzy_find(
    needle: str | NormalizedText,
    haystack: str | NormalizedText,
    max_diffs: int,
    first_n: Optional[int] = None,
    last_n: Optional[int] = None,
    case_sensitive: bool = True,
) -> MatchResult:
    """Find the closest approximate occurrence of ``needle`` in ``haystack``.

    Passes iff the best substring edit distance is within ``max_diffs``.
    ``first_n``/``last_n`` restrict the searchable region to the first or
    last N characters of the haystack (both given means the intersection).
    ``location`` is the smallest start offset among optimal matches.
    """
    best, starts = fuzzy_locate(needle, haystack, max_diffs, first_n, last_n, case_sensitive)
    passed = best <= max_diffs
    location = starts[0] if starts and passed else None
    if passed:
        explanation = f"matched at offset {location} with distance {best}"
    else:
        explanation = f"best distance {best} exceeds budget {max_diffs}"
    return MatchResult(passed=passed, best_distance=best, location=location, explanation=explanation)


def check_presence(tc, doc) -> MatchResult:
    """Text Presence: the test snippet must occur (fuzzily) in the output."""
    budget = tc.max_diffs if tc.max_diffs is not None else default_max_diffs(tc.text)
    case = tc.case_sensitive if tc.case_sensitive is not None else True
    return fuzzy_find(tc.text, doc.normalized, budget, tc.first_n, tc.last_n, case)


def check_absence(tc, doc) -> MatchResult:
    """Text Absence: the snippet must NOT occur; case-insensitive by default."""
    budget = tc.max_diffs if tc.max_diffs is not None else default_max_diffs(tc.text)
    case = tc.case_sensitive if tc.case_sensitive is not None else False
    found = fuzzy_find(tc.text, doc.normalized, budget, tc.first_n, tc.last_n, case)
    if found.passed:
        return MatchResult(
            passed=False,
            best_distance=found.best_distance,
            location=found.location,
            explanation=f"forbidden text matched at offset {found.location}",
        )
    return MatchResult(
        passed=True,
        best_distance=found.best_distance,
        explanation="forbidden text not present",
    )


def check_order(tc, doc) -> MatchResult:
    """Natural Reading Order: ``before`` must match strictly ahead of ``after``.

    When a segment has several minimal-distance occurrences, any ordered
    (before, after) offset pair passes; legitimate repeated phrases are
    not penalized.
    """
    case = tc.case_sensitive if tc.case_sensitive is not None else True
    results = []
    for segment in (tc.before, tc.after):
        budget = tc.max_diffs if tc.max_diffs is not None else default_max_diffs(segment)
        best, starts = fuzzy_locate(segment, doc.normalized, budget, tc.first_n, tc.last_n, case)
        if best > budget or not starts:
            return MatchResult(passed=False, best_distance=best, explanation="anchor not found")
        results.append(starts)
    before_starts, after_starts = results
    if min(before_starts) < max(after_starts):
        return MatchResult(
            passed=True,
            location=min(before_starts),
            explanation=f"before at {min(before_starts)} precedes after at {max(after_starts)}",
        )
    return MatchResult(
        passed=False,
        location=min(before_starts),
        explanation=f"before at {min(before_starts)} does not precede after at {max(after_starts)}",
    )


# Character classes rejected by the baseline check unless the page is
# explicitly flagged as legitimately containing them.
_REJECTED_RANGES = (
    (0x3040, 0x309F),    # Hiragana
    (0x30A0, 0x30FF),    # Katakana
    (0x3400, 0x4DBF),    # CJK Unified Ideographs Extension A
    (0x4E00, 0x9FFF),    # CJK Unified Ideographs
    (0xF900, 0xFAFF),    # CJK Compatibility Ideographs
    (0x20000, 0x2A6DF),  # CJK Unified Ideographs Extension B
    (0x1F300, 0x1F5FF),  # Miscellaneous Symbols and Pictographs
    (0x1F600, 0x1F64F),  # Emoticons
    (0x1F680, 0x1F6FF),  # Transport and Map Symbols
    (0x1F900, 0x1F9FF),  # Supplemental Symbols and Pictographs
    (0x1FA70, 0x1FAFF),  # Symbols and Pictographs Extended-A
)


def _find_rejected_char(text: str) -> Optional[str]:
    for ch in text:
        cp = ord(ch)
        for lo, hi in _REJECTED_RANGES:
            if lo <= cp <= hi:
                return ch
    return None


def find_trailing_repetition(
    text: str, max_unit: int = 50, span_threshold: int = 30
) -> Optional[tuple[str, int]]:
    """Detect a repeated unit anchored at the end of ``text``.

    Returns (unit, total span) when some unit of length 1..max_unit
    repeats at least twice consecutively at the end of the text (modulo
    trailing whitespace) and the repeated span exceeds ``span_threshold``
    characters; None otherwise.
    """
    tail = text.rstrip()
    n = len(tail)
    for unit_len in range(1, min(max_unit, n // 2) + 1):
        unit = tail[n - unit_len:]
        repeats = 1
        pos = n - unit_len
        while pos >= unit_len and tail[pos - unit_len:pos] == unit:
            repeats += 1
            pos -= unit_len
        span = repeats * unit_len
        if repeats >= 2 and span > span_threshold:
            return unit, span
    return None


def check_baseline(
    doc,
    cjk_ok: bool = False,
    repeat_threshold: int = 30,
    max_repeat_unit: int = 50,
) -> MatchResult:
    """Baseline sanity check applied to every page by default.

    Fails when (a) the output has no alphanumeric character at all,
    (b) the output ends in a run of some repeated unit spanning more
    than ``repeat_threshold`` characters, or (c) it contains CJK or
    emoji characters and the page was not flagged ``cjk_ok``.
    """
    text = _text_of(doc.normalized if hasattr(doc, "normalized") else doc)
    if not any(ch.isalnum() for ch in text):
        return MatchResult(passed=False, explanation="no alphanumeric output")
    rep = find_trailing_repetition(text, max_repeat_unit, repeat_threshold)
    if rep is not None:
        unit, span = rep
        return MatchResult(
            passed=False,
            explanation=f"trailing repetition of {unit!r} spanning {span} characters",
        )
    if not cjk_ok:
        bad = _find_rejected_char(text)
        if bad is not None:
            return MatchResult(
                passed=False,
                explanation=f"disallowed character {bad!r} ({unicodedata.name(bad, 'U+%04X' % ord(bad))})",
            )
    return MatchResult(passed=True, explanation="baseline ok")
