"""ELO ratings from pairwise human judgments.

Only decisive judgments (``a_wins``/``b_wins``) count as games; ties,
invalid pages, and skips are excluded.  Because sequential ELO updates
depend on game order, ratings are averaged over many seeded shuffles of
the game list, and confidence intervals come from bootstrap resampling of
the games.  Each game applies a single delta with opposite signs to the
two players, so the rating total is conserved by construction.

The simulation engine is vectorized: all shuffles (and all bootstrap
resamples) play their games in lockstep, one numpy-wide update per step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "OUTCOMES",
    "DECISIVE",
    "Judgment",
    "EloResult",
    "compute_elo",
    "elo_ci",
    "load_judgments",
    "dump_judgment",
    "sequential_elo",
]

OUTCOMES = ("a_wins", "b_wins", "both_good", "both_bad", "invalid", "skipped")
DECISIVE = ("a_wins", "b_wins")

DEFAULT_BASE = 1500.0
DEFAULT_K = 32.0


@dataclass(frozen=True)
class Judgment:
    """One human pairwise preference between two tools on one page."""

    page_id: str
    tool_a: str
    tool_b: str
    outcome: str
    annotator: str = ""
    timestamp: Optional[str] = None

    def __post_init__(self) -> None:
        if self.tool_a == self.tool_b:
            raise ValueError("tool_a and tool_b must differ")
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")


@dataclass
class EloResult:
    ratings: dict[str, float]
    games: dict[tuple[str, str], dict] = field(default_factory=dict)
    ci95: dict[str, tuple[float, float]] = field(default_factory=dict)


def load_judgments(path: str | Path) -> list[Judgment]:
    judgments = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                judgments.append(
                    Judgment(
                        page_id=obj["page_id"],
                        tool_a=obj["tool_a"],
                        tool_b=obj["tool_b"],
                        outcome=obj["outcome"],
                        annotator=obj.get("annotator", ""),
                        timestamp=obj.get("timestamp"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad judgment ({exc})") from exc
    return judgments


def dump_judgment(judgment: Judgment) -> str:
    obj = {
        "page_id": judgment.page_id,
        "tool_a": judgment.tool_a,
        "tool_b": judgment.tool_b,
        "outcome": judgment.outcome,
        "annotator": judgment.annotator,
    }
    if judgment.timestamp is not None:
        obj["timestamp"] = judgment.timestamp
    return json.dumps(obj, ensure_ascii=False)


def rating_update(r_winner: float, r_loser: float, k: float) -> float:
    """Delta applied to the winner (and negated for the loser) after one
    game: K * (1 - expected winner score).

    Applying one delta with opposite signs keeps the rating total
    conserved exactly, update by update.
    """
    expected = 1.0 / (1.0 + 10.0 ** ((r_loser - r_winner) / 400.0))
    return k * (1.0 - expected)


def sequential_elo(
    games: Iterable[tuple[str, str]],
    base: float = DEFAULT_BASE,
    k: float = DEFAULT_K,
) -> dict[str, float]:
    """Plain one-pass ELO over (winner, loser) games, in the given order.

    Reference implementation for the vectorized engine; handy for
    hand-checkable fixtures.
    """
    ratings: dict[str, float] = {}
    for winner, loser in games:
        ra = ratings.setdefault(winner, base)
        rb = ratings.setdefault(loser, base)
        delta = rating_update(ra, rb, k)
        ratings[winner] = ra + delta
        ratings[loser] = rb - delta
    return ratings


def _decisive_games(judgments: Sequence[Judgment]) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Tool list plus (winner_idx, loser_idx) arrays of decisive games."""
    tools = sorted({t for j in judgments for t in (j.tool_a, j.tool_b)})
    index = {t: i for i, t in enumerate(tools)}
    winners, losers = [], []
    for j in judgments:
        if j.outcome == "a_wins":
            winners.append(index[j.tool_a])
            losers.append(index[j.tool_b])
        elif j.outcome == "b_wins":
            winners.append(index[j.tool_b])
            losers.append(index[j.tool_a])
    return tools, np.asarray(winners, dtype=np.int32), np.asarray(losers, dtype=np.int32)


def _play_vectorized(
    winner_seq: np.ndarray,
    loser_seq: np.ndarray,
    n_tools: int,
    base: float,
    k: float,
) -> np.ndarray:
    """Play S simulations of G games in lockstep.

    ``winner_seq``/``loser_seq`` are (S, G) tool-index arrays; returns the
    (S, n_tools) final rating matrix.  Within one step every simulation
    touches two distinct cells of its own row, so plain fancy-index
    assignment is collision-free.
    """
    n_sims, n_games = winner_seq.shape
    ratings = np.full((n_sims, n_tools), base, dtype=np.float64)
    rows = np.arange(n_sims)
    flat = ratings.reshape(-1)
    for g in range(n_games):
        wi = rows * n_tools + winner_seq[:, g]
        li = rows * n_tools + loser_seq[:, g]
        rw = flat[wi]
        rl = flat[li]
        # Same expression as rating_update() so scalar and vector paths
        # agree bit-for-bit.
        delta = k * (1.0 - 1.0 / (1.0 + np.power(10.0, (rl - rw) / 400.0)))
        flat[wi] = rw + delta
        flat[li] = rl - delta
    return ratings


def _pair_stats(judgments: Sequence[Judgment]) -> dict[tuple[str, str], dict]:
    stats: dict[tuple[str, str], dict] = {}
    for j in judgments:
        if j.outcome not in DECISIVE:
            continue
        a, b = sorted((j.tool_a, j.tool_b))
        entry = stats.setdefault((a, b), {"wins_a": 0, "wins_b": 0})
        winner = j.tool_a if j.outcome == "a_wins" else j.tool_b
        entry["wins_a" if winner == a else "wins_b"] += 1
    for entry in stats.values():
        games = entry["wins_a"] + entry["wins_b"]
        entry["games"] = games
        entry["win_rate_a"] = entry["wins_a"] / games if games else 0.0
    return stats


def compute_elo(
    judgments: Sequence[Judgment],
    base: float = DEFAULT_BASE,
    k_factor: float = DEFAULT_K,
    shuffles: int = 100,
    seed: int = 0,
) -> EloResult:
    """Order-shuffled average ELO ratings.

    Decisive games are replayed in ``shuffles`` seeded random orders from
    a fresh base each time; each tool's rating is the mean over shuffles.
    Deterministic for a fixed seed.  With zero decisive games every tool
    sits at the base rating.
    """
    tools, winners, losers = _decisive_games(judgments)
    result = EloResult(
        ratings={t: base for t in tools},
        games=_pair_stats(judgments),
    )
    n_games = winners.shape[0]
    if n_games == 0 or not tools:
        return result
    rng = np.random.default_rng(seed)
    orders = np.argsort(rng.random((shuffles, n_games)), axis=1)
    finals = _play_vectorized(winners[orders], losers[orders], len(tools), base, k_factor)
    means = finals.mean(axis=0)
    result.ratings = {t: float(means[i]) for i, t in enumerate(tools)}
    return result


def elo_ci(
    judgments: Sequence[Judgment],
    resamples: int = 5000,
    seed: int = 0,
    base: float = DEFAULT_BASE,
    k_factor: float = DEFAULT_K,
    shuffles: int = 100,
    chunk: int = 200,
) -> dict[str, tuple[float, float]]:
    """Percentile 95% confidence interval per tool via game bootstrap.

    Each resample draws the decisive games with replacement and recomputes
    the shuffle-averaged rating; the interval is the 2.5th/97.5th
    percentile over resamples.  Deterministic for a fixed seed.
    Resamples are processed in chunks of ``chunk * shuffles`` parallel
    simulations to bound memory.
    """
    tools, winners, losers = _decisive_games(judgments)
    n_games = winners.shape[0]
    if n_games < 2:
        raise ValueError("confidence intervals need at least 2 decisive games")
    rng = np.random.default_rng(seed)
    means = np.empty((resamples, len(tools)), dtype=np.float64)
    done = 0
    while done < resamples:
        n = min(chunk, resamples - done)
        # One multiset of games per resample, then `shuffles` independent
        # orderings of that multiset.
        picks = rng.integers(0, n_games, size=(n, n_games))
        picks = np.repeat(picks, shuffles, axis=0)
        orders = np.argsort(rng.random(picks.shape), axis=1)
        seq = np.take_along_axis(picks, orders, axis=1)
        finals = _play_vectorized(winners[seq], losers[seq], len(tools), base, k_factor)
        per_resample = finals.reshape(n, shuffles, len(tools)).mean(axis=1)
        means[done:done + n] = per_resample
        done += n
    lo, hi = np.percentile(means, [2.5, 97.5], axis=0)
    return {t: (float(lo[i]), float(hi[i])) for i, t in enumerate(tools)}
