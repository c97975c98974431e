"""Execute a corpus against tool outputs and aggregate scores.

Every test is evaluated exactly once; pages without an output file fail
all their tests with explanation "no output".  Pass rates are computed
per document source, the overall score is their arithmetic mean (each
source weighted equally, regardless of test counts), and a bootstrap over
test outcomes within each source yields a 95% confidence interval.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from lineval.checks.math import RendererUnavailable, check_math
from lineval.checks.table import TableRelationTest, check_table
from lineval.checks.text import check_absence, check_baseline, check_order, check_presence
from lineval.corpus import CandidateDocument, Corpus, TestCase, load_outputs_dir

__all__ = [
    "TestOutcome",
    "RunResult",
    "evaluate_test",
    "run",
    "bootstrap_ci",
    "report_json",
    "report_markdown",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestOutcome:
    passed: bool
    explanation: str
    category: str
    source: str
    error: bool = False


@dataclass
class RunResult:
    tool: str
    per_test: dict[str, TestOutcome]
    per_source: dict[str, float]
    overall: float
    ci95: tuple[float, float]
    errors: int = 0
    warnings: list[str] = field(default_factory=list)


def evaluate_test(
    tc: TestCase,
    doc: Optional[CandidateDocument],
    renderer=None,
    repeat_threshold: int = 30,
    cjk_ok_pages: Optional[set] = None,
) -> TestOutcome:
    """Dispatch one test to its category evaluator."""
    if doc is None:
        return TestOutcome(False, "no output", tc.category, tc.source)
    try:
        if tc.category == "present":
            result = check_presence(tc, doc)
        elif tc.category == "absent":
            result = check_absence(tc, doc)
        elif tc.category == "order":
            result = check_order(tc, doc)
        elif tc.category == "table":
            relation_test = TableRelationTest(
                cell=tc.cell,
                up=tc.up, down=tc.down, left=tc.left, right=tc.right,
                top_heading=tc.top_heading, left_heading=tc.left_heading,
            )
            result = check_table(relation_test, doc, tc.max_diffs or 0)
        elif tc.category == "math":
            if renderer is None:
                raise RendererUnavailable("no renderer configured for math tests")
            result = check_math(tc, doc, renderer)
        elif tc.category == "baseline":
            cjk_ok = tc.cjk_ok or (cjk_ok_pages is not None and (tc.pdf, tc.page) in cjk_ok_pages)
            result = check_baseline(doc, cjk_ok=cjk_ok, repeat_threshold=repeat_threshold)
        else:
            return TestOutcome(False, f"unknown category {tc.category!r}", tc.category, tc.source, error=True)
    except RendererUnavailable as exc:
        return TestOutcome(False, f"error: {exc}", tc.category, tc.source, error=True)
    return TestOutcome(result.passed, result.explanation, tc.category, tc.source)


def run(
    corpus: Corpus,
    outputs_dir: str | Path,
    tool: str = "",
    jobs: int = 1,
    seed: int = 0,
    renderer=None,
    bootstrap_iterations: int = 10000,
    repeat_threshold: int = 30,
) -> RunResult:
    """Evaluate every test of ``corpus`` against one tool's output files."""
    tool = tool or Path(outputs_dir).name
    docs = load_outputs_dir(outputs_dir, corpus, tool=tool)
    tests = corpus.all_tests()
    warnings = list(corpus.warnings)
    missing_pages = corpus.pages() - set(docs)
    if missing_pages:
        warnings.append(f"{tool}: no output for {len(missing_pages)} page(s)")

    def _one(tc: TestCase) -> tuple[str, TestOutcome]:
        outcome = evaluate_test(
            tc,
            docs.get((tc.pdf, tc.page)),
            renderer=renderer,
            repeat_threshold=repeat_threshold,
            cjk_ok_pages=corpus.cjk_ok_pages,
        )
        return tc.id, outcome

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_test = dict(pool.map(_one, tests))
    else:
        per_test = dict(map(_one, tests))

    per_source = aggregate_sources(per_test)
    overall = macro_average(per_source)
    ci95 = bootstrap_ci(per_test, iterations=bootstrap_iterations, seed=seed)
    errors = sum(1 for o in per_test.values() if o.error)
    if errors:
        warnings.append(f"{tool}: {errors} test(s) errored (see per-test explanations)")
    return RunResult(
        tool=tool,
        per_test=per_test,
        per_source=per_source,
        overall=overall,
        ci95=ci95,
        errors=errors,
        warnings=warnings,
    )


def aggregate_sources(per_test: dict[str, TestOutcome]) -> dict[str, float]:
    counts: dict[str, list[int]] = {}
    for outcome in per_test.values():
        entry = counts.setdefault(outcome.source, [0, 0])
        entry[0] += 1 if outcome.passed else 0
        entry[1] += 1
    return {source: passed / total for source, (passed, total) in sorted(counts.items())}


def macro_average(per_source: dict[str, float]) -> float:
    if not per_source:
        return 0.0
    return sum(per_source.values()) / len(per_source)


def bootstrap_ci(
    per_test: dict[str, TestOutcome],
    iterations: int = 10000,
    seed: int = 0,
    chunk: int = 2000,
) -> tuple[float, float]:
    """95% CI of the macro-averaged overall score.

    Each iteration resamples test outcomes with replacement within each
    source independently, recomputes the macro average, and the interval
    is the 2.5th/97.5th percentile over iterations.  Deterministic for a
    fixed seed.
    """
    by_source: dict[str, list[bool]] = {}
    for outcome in per_test.values():
        by_source.setdefault(outcome.source, []).append(outcome.passed)
    if not by_source:
        return (0.0, 0.0)
    arrays = [np.asarray(v, dtype=np.float64) for _, v in sorted(by_source.items())]
    rng = np.random.default_rng(seed)
    overall = np.zeros(iterations, dtype=np.float64)
    done = 0
    while done < iterations:
        n = min(chunk, iterations - done)
        total = np.zeros(n, dtype=np.float64)
        for outcomes in arrays:
            size = outcomes.shape[0]
            picks = rng.integers(0, size, size=(n, size))
            total += outcomes[picks].mean(axis=1)
        overall[done:done + n] = total / len(arrays)
        done += n
    lo, hi = np.percentile(overall, [2.5, 97.5])
    return (float(lo), float(hi))


def result_to_dict(result: RunResult, include_tests: bool = True) -> dict:
    obj = {
        "tool": result.tool,
        "per_source": result.per_source,
        "overall": result.overall,
        "ci95": list(result.ci95),
        "errors": result.errors,
        "warnings": result.warnings,
    }
    if include_tests:
        obj["per_test"] = {
            test_id: {
                "passed": o.passed,
                "explanation": o.explanation,
                "category": o.category,
                "source": o.source,
                "error": o.error,
            }
            for test_id, o in sorted(result.per_test.items())
        }
    return obj


def report_json(
    results: list[RunResult],
    path: Optional[str | Path] = None,
    timestamp: Optional[str] = None,
    config: Optional[dict] = None,
) -> str:
    """Stable JSON report; identical inputs and seeds give identical bytes
    (pass ``timestamp=None`` for reproducible output)."""
    obj: dict = {"results": [result_to_dict(r) for r in results]}
    if config is not None:
        obj["config"] = config
    if timestamp is not None:
        obj["timestamp"] = timestamp
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def report_markdown(results: list[RunResult], path: Optional[str | Path] = None) -> str:
    """Markdown leaderboard: one row per tool, one column per document
    source plus the macro-averaged Overall with its CI half-width."""
    sources = sorted({s for r in results for s in r.per_source})
    header = ["Tool"] + sources + ["Overall"]
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    for r in results:
        cells = [r.tool]
        for source in sources:
            rate = r.per_source.get(source)
            cells.append(f"{100 * rate:.1f}" if rate is not None else "-")
        half_width = (r.ci95[1] - r.ci95[0]) / 2
        cells.append(f"{100 * r.overall:.1f} ± {100 * half_width:.1f}")
        lines.append("| " + " | ".join(cells) + " |")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
