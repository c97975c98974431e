"""Math formula accuracy: decide whether a candidate document contains a
rendering-equivalent occurrence of a reference LaTeX equation.

Both sides are rendered to symbols with visual bounding boxes; the
reference matches when its symbols map injectively onto candidate symbols
with equal glyphs while preserving every pairwise left-of/above relation.
This is a layout-level comparison: spacing macros, delimiter style, and
extra surrounding symbols do not matter, but ``x^i`` and ``x_i`` render to
different relative orientations and therefore never match each other.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from statistics import median
from typing import Optional

from lineval.checks.text import MatchResult

__all__ = [
    "SymbolBox",
    "SymbolLayout",
    "RelationGraph",
    "extract_candidate_equations",
    "relation_graph",
    "match_formula",
    "match_formula_detailed",
    "check_math",
    "RendererUnavailable",
    "DEFAULT_NODE_BUDGET",
]

log = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10**6

LEFT_OF = 1
ABOVE = 2


class RendererUnavailable(RuntimeError):
    """The rendering bridge could not be reached; the test must error,
    not fail, so runs are not silently biased."""


@dataclass(frozen=True)
class SymbolBox:
    """One rendered glyph with its visual bounding box (y grows downward)."""

    glyph: str
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not self.glyph:
            raise ValueError("glyph must be non-empty")
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box for {self.glyph!r}")

    @property
    def cx(self) -> float:
        return (self.x0 + self.x1) / 2.0

    @property
    def cy(self) -> float:
        return (self.y0 + self.y1) / 2.0

    @property
    def height(self) -> float:
        return self.y1 - self.y0


@dataclass(frozen=True)
class SymbolLayout:
    """All rendered symbols of one equation."""

    symbols: tuple[SymbolBox, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass
class RelationGraph:
    """Pairwise orientation relations between symbol centers.

    Only left-of and above are primitive; right-of/below are their
    converses.  Pairs whose centers differ by at most tau on an axis get
    no edge on that axis.
    """

    glyphs: list[str]
    edges: set[tuple[int, int, str]] = field(default_factory=set)

    def has(self, i: int, j: int, relation: str) -> bool:
        return (i, j, relation) in self.edges


def default_tau(layout: SymbolLayout) -> float:
    """Center-separation tolerance: 25% of the median symbol height."""
    if not layout.symbols:
        return 1.0
    return 0.25 * median(box.height for box in layout.symbols)


def relation_graph(layout: SymbolLayout, tau: float) -> RelationGraph:
    """Build the explicit relation graph of a layout (small layouts only;
    the matcher itself evaluates relations on the fly)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    graph = RelationGraph(glyphs=[box.glyph for box in layout.symbols])
    for i, a in enumerate(layout.symbols):
        for j, b in enumerate(layout.symbols):
            if i == j:
                continue
            if a.cx + tau < b.cx:
                graph.edges.add((i, j, "left-of"))
            if a.cy + tau < b.cy:
                graph.edges.add((i, j, "above"))
    return graph


_MATH_SPAN_RE = re.compile(
    r"\$\$(?P<dd>.+?)\$\$"
    r"|\\\[(?P<bb>.+?)\\\]"
    r"|\\\((?P<pp>.+?)\\\)"
    r"|(?<!\$)\$(?P<d>[^$]+?)\$(?!\$)",
    re.DOTALL,
)
_CODE_FENCE_RE = re.compile(r"```.*?```", re.DOTALL)


def extract_candidate_equations(doc) -> list[tuple[str, bool]]:
    """All LaTeX spans in the raw output, outside code fences.

    Returns (latex, display_mode) pairs: ``$$...$$`` and ``\\[...\\]``
    are display spans, ``$...$`` and ``\\(...\\)`` inline.  Duplicates
    are dropped, order of first appearance preserved.
    """
    raw = doc if isinstance(doc, str) else doc.raw
    masked = _CODE_FENCE_RE.sub(lambda m: " " * len(m.group(0)), raw)
    seen: set[tuple[str, bool]] = set()
    out: list[tuple[str, bool]] = []
    for m in _MATH_SPAN_RE.finditer(masked):
        display = m.lastgroup in ("dd", "bb")
        latex = (m.group(m.lastgroup) or "").strip()
        if not latex:
            continue
        key = (latex, display)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def _load_glyph_equivalences() -> dict[str, str]:
    data = resources.files("lineval.data").joinpath("glyph_equiv.json").read_text("utf-8")
    return json.loads(data)


_GLYPH_EQUIV = _load_glyph_equivalences()


def fold_glyph(glyph: str) -> str:
    """Canonical glyph identity: NFC plus the visual-equivalence table."""
    g = unicodedata.normalize("NFC", glyph)
    return _GLYPH_EQUIV.get(g, g)


def match_formula_detailed(
    reference: SymbolLayout,
    candidate: SymbolLayout,
    tau: Optional[float] = None,
    budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[bool, bool]:
    """Core matcher; returns (matched, budget_exhausted).

    Searches for an injective glyph-preserving mapping of reference
    symbols onto candidate symbols under which every reference left-of /
    above relation also holds between the mapped candidate centers.
    Backtracking assigns rarest-glyph symbols first; each attempted
    assignment costs one unit of ``budget``.
    """
    if not reference.symbols:
        raise ValueError("reference layout must be non-empty")
    if tau is None:
        tau = default_tau(reference)

    ref_glyphs = [fold_glyph(b.glyph) for b in reference.symbols]
    cand_glyphs = [fold_glyph(b.glyph) for b in candidate.symbols]
    cand_by_glyph: dict[str, list[int]] = {}
    for idx, g in enumerate(cand_glyphs):
        cand_by_glyph.setdefault(g, []).append(idx)

    counts = Counter(cand_glyphs)
    need = Counter(ref_glyphs)
    for glyph, n in need.items():
        if counts[glyph] < n:
            return False, False

    n_ref = len(reference.symbols)
    order = sorted(range(n_ref), key=lambda i: (counts[ref_glyphs[i]], i))

    # Reference relations as a bitmask matrix in assignment order.
    rel = [[0] * n_ref for _ in range(n_ref)]
    for a in range(n_ref):
        box_a = reference.symbols[order[a]]
        for b in range(n_ref):
            if a == b:
                continue
            box_b = reference.symbols[order[b]]
            bits = 0
            if box_a.cx + tau < box_b.cx:
                bits |= LEFT_OF
            if box_a.cy + tau < box_b.cy:
                bits |= ABOVE
            rel[a][b] = bits

    cand_boxes = candidate.symbols
    cand_options = [cand_by_glyph[ref_glyphs[order[a]]] for a in range(n_ref)]

    assignment = [-1] * n_ref
    used = [False] * len(cand_boxes)
    expansions = 0

    def consistent(depth: int, cand_idx: int) -> bool:
        box_new = cand_boxes[cand_idx]
        for prev in range(depth):
            box_prev = cand_boxes[assignment[prev]]
            bits = rel[prev][depth]
            if bits & LEFT_OF and not (box_prev.cx + tau < box_new.cx):
                return False
            if bits & ABOVE and not (box_prev.cy + tau < box_new.cy):
                return False
            bits = rel[depth][prev]
            if bits & LEFT_OF and not (box_new.cx + tau < box_prev.cx):
                return False
            if bits & ABOVE and not (box_new.cy + tau < box_prev.cy):
                return False
        return True

    def search(depth: int) -> Optional[bool]:
        nonlocal expansions
        if depth == n_ref:
            return True
        for cand_idx in cand_options[depth]:
            if used[cand_idx]:
                continue
            expansions += 1
            if expansions > budget:
                return None
            if not consistent(depth, cand_idx):
                continue
            assignment[depth] = cand_idx
            used[cand_idx] = True
            result = search(depth + 1)
            if result:
                return True
            assignment[depth] = -1
            used[cand_idx] = False
            if result is None:
                return None
        return False

    outcome = search(0)
    if outcome is None:
        log.warning(
            "formula match budget exhausted after %d expansions (%d ref vs %d cand symbols)",
            expansions, n_ref, len(cand_boxes),
        )
        return False, True
    return bool(outcome), False


def match_formula(
    reference: SymbolLayout,
    candidate: SymbolLayout,
    tau: Optional[float] = None,
    budget: int = DEFAULT_NODE_BUDGET,
) -> bool:
    """True iff the reference layout occurs within the candidate layout
    (equal glyphs, same relative orientations).  Budget exhaustion is a
    soft failure: logged and reported as False."""
    matched, _ = match_formula_detailed(reference, candidate, tau, budget)
    return matched


def check_math(tc, doc, renderer, budget: int = DEFAULT_NODE_BUDGET) -> MatchResult:
    """Pass iff any candidate equation in the output matches ``tc.math``.

    The reference equation is rendered in display mode; candidates keep
    the mode their delimiters imply.  Candidates that fail to render are
    skipped.  A dead renderer raises :class:`RendererUnavailable` so the
    run records an error rather than a silent failure.
    """
    try:
        reference = renderer.render_layout(tc.math, display=True)
    except RendererUnavailable:
        raise
    except Exception as exc:
        raise RendererUnavailable(f"reference equation failed to render: {exc}") from exc
    if reference is None or not reference.symbols:
        raise RendererUnavailable(f"reference equation rendered to no symbols: {tc.math!r}")

    tau = default_tau(reference)
    candidates = extract_candidate_equations(doc)
    if not candidates:
        return MatchResult(passed=False, explanation="no candidate equations in output")

    exhausted_any = False
    for latex, display in candidates:
        try:
            layout = renderer.render_layout(latex, display=display)
        except RendererUnavailable:
            raise
        except Exception:
            continue  # unrenderable candidate: skip, try the next one
        if layout is None or not layout.symbols:
            continue
        matched, exhausted = match_formula_detailed(reference, layout, tau, budget)
        if matched:
            return MatchResult(passed=True, explanation=f"matched candidate {latex!r}")
        exhausted_any = exhausted_any or exhausted
    explanation = "no candidate equation matched"
    if exhausted_any:
        explanation += " (search budget exhausted on at least one candidate)"
    return MatchResult(passed=False, explanation=explanation)
