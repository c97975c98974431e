"""Data model and on-disk format for test cases, corpora, and tool output.

A corpus directory holds one JSONL file per document source (the file stem
is the source name) plus a ``pdfs/`` tree with the referenced pages.  Each
JSONL line is one test case; field names are part of the external
interface and kept bit-exact:

    id, pdf, page, type, text, before, after, cell, up, down, left,
    right, top_heading, left_heading, math, max_diffs, first_n, last_n,
    case_sensitive, checked, url

Unknown keys are warnings, not errors.  An optional ``flags.json`` in the
corpus directory lists pages that legitimately contain CJK/emoji text
(``{"cjk_ok": [["doc.pdf", 3], ...]}``); the baseline charset sub-check is
disabled for those pages.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from lineval.normalize import NormalizedText, normalize

__all__ = [
    "CATEGORIES",
    "JSONL_KEYS",
    "TestCase",
    "Corpus",
    "CandidateDocument",
    "CorpusError",
    "load_corpus",
    "attach_baseline_tests",
    "dump_test_case",
]

log = logging.getLogger(__name__)

CATEGORIES = ("present", "absent", "order", "table", "math", "baseline")

JSONL_KEYS = (
    "id", "pdf", "page", "type", "text", "before", "after", "cell",
    "up", "down", "left", "right", "top_heading", "left_heading", "math",
    "max_diffs", "first_n", "last_n", "case_sensitive", "checked", "url",
)

BASELINE_SOURCE = "baseline"


class CorpusError(ValueError):
    """A corpus file failed validation; the message names file and line."""


@dataclass(frozen=True)
class TestCase:
    """One pass/fail unit test bound to a PDF page."""

    id: str
    pdf: str
    page: int
    category: str
    source: str = ""
    text: Optional[str] = None
    before: Optional[str] = None
    after: Optional[str] = None
    cell: Optional[str] = None
    up: Optional[str] = None
    down: Optional[str] = None
    left: Optional[str] = None
    right: Optional[str] = None
    top_heading: Optional[str] = None
    left_heading: Optional[str] = None
    math: Optional[str] = None
    max_diffs: Optional[int] = None
    first_n: Optional[int] = None
    last_n: Optional[int] = None
    case_sensitive: Optional[bool] = None
    checked: Optional[str] = None
    url: Optional[str] = None
    cjk_ok: bool = False


@dataclass
class Corpus:
    """Immutable-after-load collection of test cases grouped by source."""

    sources: dict[str, list[TestCase]]
    pdf_root: Path
    cjk_ok_pages: set[tuple[str, int]] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)

    @property
    def source_counts(self) -> dict[str, int]:
        return {name: len(tests) for name, tests in self.sources.items()}

    def all_tests(self) -> list[TestCase]:
        return [tc for tests in self.sources.values() for tc in tests]

    def pages(self) -> set[tuple[str, int]]:
        return {(tc.pdf, tc.page) for tc in self.all_tests()}


@dataclass(frozen=True)
class CandidateDocument:
    """One tool's plain-text/Markdown output for one page."""

    pdf: str
    page: int
    raw: str
    normalized: NormalizedText
    tool: str = ""

    @classmethod
    def from_raw(cls, pdf: str, page: int, raw: str, tool: str = "") -> "CandidateDocument":
        return cls(pdf=pdf, page=page, raw=raw, normalized=normalize(raw), tool=tool)


_REQUIRED_BY_CATEGORY = {
    "present": ("text",),
    "absent": ("text",),
    "order": ("before", "after"),
    "table": ("cell",),
    "math": ("math",),
    "baseline": (),
}


def _parse_line(obj: dict, source: str, where: str) -> tuple[TestCase, list[str]]:
    warnings = [f"{where}: unknown key {k!r}" for k in obj if k not in JSONL_KEYS]
    for key in ("id", "pdf", "page", "type"):
        if key not in obj:
            raise CorpusError(f"{where}: missing required key {key!r}")
    category = obj["type"]
    if category not in CATEGORIES:
        raise CorpusError(f"{where}: unknown category {category!r}")
    page = obj["page"]
    if not isinstance(page, int) or page < 1:
        raise CorpusError(f"{where}: page must be an integer >= 1, got {page!r}")
    for key in _REQUIRED_BY_CATEGORY[category]:
        if not obj.get(key):
            raise CorpusError(f"{where}: category {category!r} requires key {key!r}")
    for key in ("first_n", "last_n"):
        value = obj.get(key)
        if value is not None and (not isinstance(value, int) or value < 1):
            raise CorpusError(f"{where}: {key} must be an integer >= 1, got {value!r}")
    max_diffs = obj.get("max_diffs")
    if max_diffs is not None and (not isinstance(max_diffs, int) or max_diffs < 0):
        raise CorpusError(f"{where}: max_diffs must be an integer >= 0, got {max_diffs!r}")
    if category == "table" and not any(
        obj.get(k) for k in ("up", "down", "left", "right", "top_heading", "left_heading")
    ):
        raise CorpusError(f"{where}: table test needs at least one relation")
    known = {k: v for k, v in obj.items() if k in JSONL_KEYS and k != "type"}
    return TestCase(category=category, source=source, **known), warnings


def load_corpus(corpus_dir: str | Path, strict: bool = False) -> Corpus:
    """Load and validate every source JSONL under ``corpus_dir``.

    Bad lines (malformed JSON, unknown category, duplicate id, dangling
    pdf path) are skipped and reported in ``Corpus.warnings``; with
    ``strict`` the first problem raises :class:`CorpusError` instead.
    """
    corpus_dir = Path(corpus_dir)
    pdf_root = corpus_dir / "pdfs"
    sources: dict[str, list[TestCase]] = {}
    warnings: list[str] = []
    seen_ids: set[str] = set()

    def problem(message: str) -> None:
        if strict:
            raise CorpusError(message)
        warnings.append(message)

    jsonl_files = sorted(corpus_dir.glob("*.jsonl"))
    if not jsonl_files:
        raise CorpusError(f"no source JSONL files found in {corpus_dir}")
    for path in jsonl_files:
        source = path.stem
        tests: list[TestCase] = []
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                where = f"{path.name}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    problem(f"{where}: malformed JSON ({exc.msg})")
                    continue
                try:
                    tc, line_warnings = _parse_line(obj, source, where)
                except CorpusError as exc:
                    problem(str(exc))
                    continue
                warnings.extend(line_warnings)
                if tc.id in seen_ids:
                    problem(f"{where}: duplicate test id {tc.id!r}")
                    continue
                if not (pdf_root / tc.pdf).exists():
                    problem(f"{where}: pdf path {tc.pdf!r} not found under {pdf_root}")
                    continue
                seen_ids.add(tc.id)
                tests.append(tc)
        sources[source] = tests

    cjk_ok_pages: set[tuple[str, int]] = set()
    flags_path = corpus_dir / "flags.json"
    if flags_path.exists():
        flags = json.loads(flags_path.read_text(encoding="utf-8"))
        cjk_ok_pages = {(pdf, int(page)) for pdf, page in flags.get("cjk_ok", [])}

    corpus = Corpus(sources=sources, pdf_root=pdf_root, cjk_ok_pages=cjk_ok_pages, warnings=warnings)
    for name, count in corpus.source_counts.items():
        log.debug("loaded source %s: %d tests", name, count)
    return corpus


def attach_baseline_tests(corpus: Corpus) -> Corpus:
    """Add exactly one baseline test per distinct (pdf, page).

    Pages flagged as legitimately containing CJK/emoji get a baseline
    test with the charset sub-check disabled.  Explicit baseline tests
    already present in the corpus suppress the implicit one for their
    page.  Returns a new Corpus; the input is left untouched.
    """
    covered = {
        (tc.pdf, tc.page)
        for tests in corpus.sources.values()
        for tc in tests
        if tc.category == "baseline"
    }
    new_tests: list[TestCase] = []
    for pdf, page in sorted(corpus.pages()):
        if (pdf, page) in covered:
            continue
        new_tests.append(
            TestCase(
                id=f"baseline:{pdf}:{page}",
                pdf=pdf,
                page=page,
                category="baseline",
                source=BASELINE_SOURCE,
                cjk_ok=(pdf, page) in corpus.cjk_ok_pages,
            )
        )
    sources = {name: list(tests) for name, tests in corpus.sources.items()}
    if new_tests:
        sources.setdefault(BASELINE_SOURCE, [])
        sources[BASELINE_SOURCE] = sources[BASELINE_SOURCE] + new_tests
    return replace(corpus, sources=sources)


def dump_test_case(tc: TestCase) -> str:
    """Serialize one test case to its canonical JSONL line.

    Keys appear in schema order and unset optional fields are omitted,
    so load -> dump is a canonical form (round-trip stable).
    """
    obj = {}
    for key in JSONL_KEYS:
        value = getattr(tc, "category" if key == "type" else key)
        if value is not None:
            obj[key] = value
    return json.dumps(obj, ensure_ascii=False)


def load_outputs_dir(
    outputs_dir: str | Path, corpus: Corpus, tool: str = ""
) -> dict[tuple[str, int], CandidateDocument]:
    """Read one tool's output files for every page the corpus references.

    The naming convention is ``<pdf-stem>_pg<page>.md`` (``.txt`` also
    accepted).  Pages without a file are simply absent from the result;
    the runner fails their tests with explanation "no output".
    """
    outputs_dir = Path(outputs_dir)
    docs: dict[tuple[str, int], CandidateDocument] = {}
    for pdf, page in corpus.pages():
        stem = Path(pdf).stem
        for suffix in (".md", ".txt"):
            path = outputs_dir / f"{stem}_pg{page}{suffix}"
            if path.exists():
                raw = path.read_text(encoding="utf-8", errors="replace")
                docs[(pdf, page)] = CandidateDocument.from_raw(pdf, page, raw, tool=tool)
                break
    return docs


def iter_output_tools(outputs_root: str | Path) -> Iterable[tuple[str, Path]]:
    """Yield (tool name, directory) for each tool subdirectory."""
    outputs_root = Path(outputs_root)
    for child in sorted(outputs_root.iterdir()):
        if child.is_dir():
            yield child.name, child
