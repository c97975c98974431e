"""Parse Markdown pipe tables and HTML tables into a logical grid and
verify cell-neighborhood relations against it.

HTML ``rowspan``/``colspan`` attributes are expanded, so a cell spanning k
columns occupies k grid positions carrying identical text.  Malformed
tables are skipped with a diagnostic, never a crash.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser
from typing import Optional

from lineval.checks.text import MatchResult, fuzzy_find
from lineval.normalize import normalize

__all__ = ["LogicalGrid", "TableRelationTest", "extract_tables", "check_table"]


@dataclass
class LogicalGrid:
    """A table as a sparse (row, col) -> text mapping after span expansion."""

    cells: dict[tuple[int, int], str]
    n_rows: int
    n_cols: int

    def get(self, row: int, col: int) -> Optional[str]:
        return self.cells.get((row, col))


@dataclass(frozen=True)
class TableRelationTest:
    """Expected neighborhood of one target cell; at least one relation set."""

    cell: str
    up: Optional[str] = None
    down: Optional[str] = None
    left: Optional[str] = None
    right: Optional[str] = None
    top_heading: Optional[str] = None
    left_heading: Optional[str] = None

    def relations(self) -> dict[str, str]:
        rels = {
            name: getattr(self, name)
            for name in ("up", "down", "left", "right", "top_heading", "left_heading")
            if getattr(self, name) is not None
        }
        if not rels:
            raise ValueError("table test needs at least one relation")
        return rels


_ALIGN_CELL_RE = re.compile(r"^\s*:?-{1,}:?\s*$")
_FENCE_RE = re.compile(r"```.*?```", re.DOTALL)


def _split_pipe_row(line: str) -> list[str]:
    # Split on pipes, honoring backslash escapes; outer empties from
    # leading/trailing pipes are dropped.
    cells, buf, escaped = [], [], False
    for ch in line:
        if escaped:
            buf.append(ch)
            escaped = False
        elif ch == "\\":
            escaped = True
        elif ch == "|":
            cells.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    cells.append("".join(buf))
    if cells and not cells[0].strip():
        cells = cells[1:]
    if cells and not cells[-1].strip():
        cells = cells[:-1]
    return [c.strip() for c in cells]


def _markdown_tables(text: str) -> list[list[list[str]]]:
    tables: list[list[list[str]]] = []
    block: list[list[str]] = []
    for line in text.splitlines() + [""]:
        if "|" in line:
            row = _split_pipe_row(line)
            if row and all(_ALIGN_CELL_RE.match(c) for c in row):
                continue  # alignment row, not cells
            if row:
                block.append(row)
                continue
        if len(block) >= 2:
            tables.append(block)
        block = []
    return tables


class _TableHTMLParser(HTMLParser):
    """Collects every <table> as rows of (text, rowspan, colspan) cells."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.tables: list[list[list[tuple[str, int, int]]]] = []
        self._stack: list[list[list[tuple[str, int, int]]]] = []
        self._row: Optional[list[tuple[str, int, int]]] = None
        self._cell: Optional[list[str]] = None
        self._spans: tuple[int, int] = (1, 1)

    @staticmethod
    def _span(attrs: dict[str, Optional[str]], name: str) -> int:
        try:
            return max(1, int(attrs.get(name) or 1))
        except (TypeError, ValueError):
            return 1

    def _close_cell(self) -> None:
        if self._cell is not None and self._row is not None:
            rs, cs = self._spans
            self._row.append(("".join(self._cell).strip(), rs, cs))
        self._cell = None

    def _close_row(self) -> None:
        self._close_cell()
        if self._row is not None and self._stack:
            self._stack[-1].append(self._row)
        self._row = None

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        attrs_map = dict(attrs)
        if tag == "table":
            self._close_row()
            self._stack.append([])
        elif tag == "tr" and self._stack:
            self._close_row()
            self._row = []
        elif tag in ("td", "th") and self._stack:
            self._close_cell()
            if self._row is None:
                self._row = []
            self._cell = []
            self._spans = (self._span(attrs_map, "rowspan"), self._span(attrs_map, "colspan"))

    def handle_endtag(self, tag: str) -> None:
        if tag in ("td", "th"):
            self._close_cell()
        elif tag == "tr":
            self._close_row()
        elif tag == "table" and self._stack:
            self._close_row()
            self.tables.append(self._stack.pop())

    def handle_data(self, data: str) -> None:
        if self._cell is not None:
            self._cell.append(data)


def _grid_from_spans(
    rows: list[list[tuple[str, int, int]]], diagnostics: list[str]
) -> Optional[LogicalGrid]:
    cells: dict[tuple[int, int], str] = {}
    for r, row in enumerate(rows):
        c = 0
        for text, rowspan, colspan in row:
            while (r, c) in cells:
                c += 1
            for dr in range(rowspan):
                for dc in range(colspan):
                    pos = (r + dr, c + dc)
                    if pos in cells and (dr, dc) != (0, 0):
                        diagnostics.append(f"overlapping span at {pos}, table skipped")
                        return None
                    cells[pos] = normalize(text).value
            c += colspan
    if not cells:
        return None
    n_rows = max(r for r, _ in cells) + 1
    n_cols = max(c for _, c in cells) + 1
    return LogicalGrid(cells=cells, n_rows=n_rows, n_cols=n_cols)


def extract_tables(doc, diagnostics: Optional[list[str]] = None) -> list[LogicalGrid]:
    """Extract every Markdown pipe table and HTML <table> as a LogicalGrid.

    ``doc`` is a CandidateDocument or a raw string; tables are parsed
    from the raw (un-normalized) output, cell texts are normalized.
    Problems are appended to ``diagnostics`` when given.
    """
    raw = doc if isinstance(doc, str) else doc.raw
    diags = diagnostics if diagnostics is not None else []
    grids: list[LogicalGrid] = []

    no_fences = _FENCE_RE.sub("", raw)
    for block in _markdown_tables(no_fences):
        rows = [[(text, 1, 1) for text in row] for row in block]
        grid = _grid_from_spans(rows, diags)
        if grid is not None:
            grids.append(grid)

    if "<table" in raw.lower():
        parser = _TableHTMLParser()
        try:
            parser.feed(raw)
            parser.close()
        except Exception as exc:  # pragma: no cover - HTMLParser rarely raises
            diags.append(f"html parse error: {exc}")
        for rows in parser.tables:
            grid = _grid_from_spans(rows, diags)
            if grid is not None:
                grids.append(grid)
    return grids


_ADJACENT = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


def _relation_text(grid: LogicalGrid, row: int, col: int, relation: str) -> Optional[str]:
    if relation in _ADJACENT:
        dr, dc = _ADJACENT[relation]
        return grid.get(row + dr, col + dc)
    if relation == "top_heading":
        for r in range(row - 1, -1, -1):
            text = grid.get(r, col)
            if text:
                return text
        return None
    if relation == "left_heading":
        for c in range(col - 1, -1, -1):
            text = grid.get(row, c)
            if text:
                return text
        return None
    raise ValueError(f"unknown relation {relation!r}")


def check_table(tc: TableRelationTest, doc, max_diffs: int = 0):
    """Pass iff some grid has a cell matching ``tc.cell`` whose stated
    relations all hold.

    Cell matching reuses the fuzzy matcher with ``max_diffs`` (default 0;
    table values are short).  ``up``/``down``/``left``/``right`` compare
    the adjacent grid position; ``top_heading``/``left_heading`` compare
    the nearest non-empty cell scanning to row 0 / column 0.  When
    several cells match the target, any one satisfying all relations
    passes.
    """
    relations = tc.relations()
    expected_cell = normalize(tc.cell).value
    diagnostics: list[str] = []
    grids = extract_tables(doc, diagnostics)
    if not grids:
        return MatchResult(passed=False, explanation="no tables found in output")

    def cell_matches(expected: str, actual: Optional[str]) -> bool:
        if actual is None or not expected:
            return False
        return fuzzy_find(expected, actual, max_diffs).passed

    best_failure = "target cell not found in any table"
    for grid in grids:
        for (row, col), text in grid.cells.items():
            if not cell_matches(expected_cell, text):
                continue
            failed = None
            for relation, raw_expected in relations.items():
                expected = normalize(raw_expected).value
                actual = _relation_text(grid, row, col, relation)
                if not cell_matches(expected, actual):
                    failed = (relation, expected, actual)
                    break
            if failed is None:
                return MatchResult(
                    passed=True,
                    location=row,
                    explanation=f"cell at ({row},{col}) satisfies {sorted(relations)}",
                )
            best_failure = (
                f"cell at ({row},{col}): {failed[0]} is {failed[2]!r}, expected {failed[1]!r}"
            )
    return MatchResult(passed=False, explanation=best_failure)
