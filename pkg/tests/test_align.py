from __future__ import annotations

import random
import tracemalloc

import pytest

from lineval.align import align_score, align_words, bucket_for
from oracles import lcs_match_count


def words(n: int, rng: random.Random, vocab: int = 50) -> list[str]:
    return [f"w{rng.randrange(vocab)}" for _ in range(n)]


def test_identical_documents():
    score = align_score("a b c d", "a b c d")
    assert score.score == 1.0 and score.bucket == "high" and score.matched == 4


def test_disjoint_vocabularies():
    score = align_score("a b c", "x y z")
    assert score.score == 0.0 and score.bucket == "low" and score.matched == 0


def test_half_match_example():
    score = align_score("w1 w2 w3 w4", "w1 wX w3 wY")
    assert score.matched == lcs_match_count("w1 w2 w3 w4".split(), "w1 wX w3 wY".split()) == 2
    assert score.score == 0.5 and score.bucket == "low"


def test_empty_documents_score_one():
    score = align_score("", "")
    assert score.score == 1.0 and score.bucket == "high"
    assert align_score("", "a b").score == 0.0


def test_symmetry():
    rng = random.Random(11)
    for _ in range(100):
        a = " ".join(words(rng.randrange(0, 40), rng, vocab=8))
        b = " ".join(words(rng.randrange(0, 40), rng, vocab=8))
        assert align_score(a, b).score == align_score(b, a).score


def test_matched_count_equals_oracle():
    rng = random.Random(12)
    for _ in range(200):
        a = words(rng.randrange(0, 80), rng, vocab=rng.choice([3, 10, 100]))
        b = words(rng.randrange(0, 80), rng, vocab=rng.choice([3, 10, 100]))
        assert len(align_words(a, b)) == lcs_match_count(a, b)


def test_aligned_pairs_are_a_real_alignment():
    rng = random.Random(13)
    for _ in range(100):
        a = words(rng.randrange(1, 40), rng, vocab=5)
        b = words(rng.randrange(1, 40), rng, vocab=5)
        pairs = align_words(a, b)
        for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
            assert i1 < i2 and j1 < j2  # strictly increasing in both
        for i, j in pairs:
            assert a[i] == b[j]


def test_bucket_boundaries():
    assert bucket_for(0.699) == "low"
    assert bucket_for(0.70) == "medium"
    assert bucket_for(0.95) == "medium"
    assert bucket_for(0.951) == "high"


def test_denominator_variants():
    assert align_score("a b c d", "a b", denominator="min").score == 1.0
    assert align_score("a b c d", "a b", denominator="mean").score == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        align_score("a", "a", denominator="median")


def test_linear_space_on_large_inputs():
    # Peak auxiliary memory must track the shorter sequence, not the DP
    # table: 100k x 10k words would need ~4 GB quadratically.
    rng = random.Random(14)
    a = words(100_000, rng, vocab=1000)
    b = words(10_000, rng, vocab=1000)
    tracemalloc.start()
    matched = len(align_words(a, b))
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert matched > 0
    assert peak < 64 * 1024 * 1024
