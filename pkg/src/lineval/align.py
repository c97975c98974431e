"""Document similarity via word-level global alignment in linear space.

Two documents are tokenized into words; a global alignment maximizing the
number of exactly-equal aligned word pairs (match +1, mismatch/gap 0) is
computed with Hirschberg's divide-and-conquer over Needleman-Wunsch score
rows, so peak memory stays proportional to the shorter document.  The
score is the matched count over the longer document's length, bucketed
into low (< 0.70), medium (0.70 to 0.95), and high (> 0.95).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from lineval.normalize import NormalizedText

__all__ = ["AlignmentScore", "align_score", "align_words", "bucket_for"]

# Below this many DP cells a plain quadratic pass with traceback is
# cheaper than further recursion.
_DIRECT_CELLS = 4096


@dataclass(frozen=True)
class AlignmentScore:
    matched: int
    len_a: int
    len_b: int
    score: float
    bucket: str


def bucket_for(score: float) -> str:
    """Map an alignment fraction to its reporting bucket.

    Boundaries are part of the contract: the medium band is closed at
    both ends, so 0.70 and 0.95 are medium while 0.951 is high.
    """
    if score > 0.95:
        return "high"
    if score >= 0.70:
        return "medium"
    return "low"


def _score_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Final NW score row for match=1, mismatch/gap=0 (an LCS row).

    The left-neighbor dependency costs nothing under these weights, so
    each row is a running maximum and the update vectorizes over ``b``.
    Scratch buffers are reused across rows; this loop dominates large
    alignments.
    """
    m = b.shape[0]
    row = np.zeros(m + 1, dtype=np.int32)
    cand = np.zeros(m + 1, dtype=np.int32)
    diag = np.empty(m, dtype=np.int32)
    eq = np.empty(m, dtype=bool)
    for ch in a:
        np.equal(b, ch, out=eq)
        np.add(row[:-1], eq, out=diag, casting="unsafe")
        np.maximum(row[1:], diag, out=cand[1:])
        np.maximum.accumulate(cand, out=row)
    return row


def _align_direct(a: np.ndarray, b: np.ndarray, off_a: int, off_b: int, pairs: list[tuple[int, int]]) -> None:
    """Quadratic-space DP with traceback for small subproblems."""
    n, m = a.shape[0], b.shape[0]
    dp = np.zeros((n + 1, m + 1), dtype=np.int32)
    for i in range(1, n + 1):
        np.maximum(dp[i - 1, 1:], dp[i - 1, :-1] + (b == a[i - 1]), out=dp[i, 1:])
        np.maximum.accumulate(dp[i], out=dp[i])
    i, j = n, m
    rev: list[tuple[int, int]] = []
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and dp[i, j] == dp[i - 1, j - 1] + 1:
            rev.append((off_a + i - 1, off_b + j - 1))
            i -= 1
            j -= 1
        elif dp[i - 1, j] >= dp[i, j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.extend(reversed(rev))


def _hirschberg(a: np.ndarray, b: np.ndarray, off_a: int, off_b: int, pairs: list[tuple[int, int]]) -> None:
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return
    if n == 1:
        hits = np.flatnonzero(b == a[0])
        if hits.size:
            pairs.append((off_a, off_b + int(hits[0])))
        return
    if n * m <= _DIRECT_CELLS:
        _align_direct(a, b, off_a, off_b, pairs)
        return
    mid = n // 2
    fwd = _score_rows(a[:mid], b)
    bwd = _score_rows(a[mid:][::-1], b[::-1])
    split = int(np.argmax(fwd + bwd[::-1]))
    _hirschberg(a[:mid], b[:split], off_a, off_b, pairs)
    _hirschberg(a[mid:], b[split:], off_a + mid, off_b + split, pairs)


def align_words(words_a: Sequence[str], words_b: Sequence[str]) -> list[tuple[int, int]]:
    """Indices of aligned equal-word pairs under the optimal alignment.

    Pairs are strictly increasing in both coordinates; their count is
    the alignment's matched-word total.
    """
    if not words_a or not words_b:
        return []
    # Map words to integer codes once; rows then compare int32 arrays.
    vocab: dict[str, int] = {}
    def encode(words: Sequence[str]) -> np.ndarray:
        return np.fromiter(
            (vocab.setdefault(w, len(vocab)) for w in words), dtype=np.int32, count=len(words)
        )
    a = encode(words_a)
    b = encode(words_b)
    pairs: list[tuple[int, int]] = []
    # Recurse over the shorter sequence so score rows (and therefore peak
    # auxiliary memory) are sized by min(len_a, len_b).
    if len(a) <= len(b):
        _hirschberg(b, a, 0, 0, pairs)
        pairs = [(j, i) for i, j in pairs]
        pairs.sort()
        return pairs
    _hirschberg(a, b, 0, 0, pairs)
    return pairs


def align_score(a: str | NormalizedText, b: str | NormalizedText, denominator: str = "max") -> AlignmentScore:
    """Alignment score between two documents (whitespace-tokenized words).

    ``denominator`` selects what the matched count is divided by:
    ``max`` (default; penalizes omission and hallucination equally),
    ``min``, or ``mean``.  Two empty documents score 1.0 by convention.
    """
    text_a = a.value if isinstance(a, NormalizedText) else a
    text_b = b.value if isinstance(b, NormalizedText) else b
    words_a = text_a.split()
    words_b = text_b.split()
    matched = len(align_words(words_a, words_b))
    la, lb = len(words_a), len(words_b)
    if denominator == "max":
        denom = max(la, lb)
    elif denominator == "min":
        denom = min(la, lb)
    elif denominator == "mean":
        denom = (la + lb) / 2
    else:
        raise ValueError(f"unknown denominator {denominator!r}")
    score = matched / denom if denom else 1.0
    return AlignmentScore(matched=matched, len_a=la, len_b=lb, score=score, bucket=bucket_for(score))
