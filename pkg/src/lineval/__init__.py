"""lineval: deterministic unit-test evaluation for PDF linearization and
OCR output, plus the surrounding toolkit (alignment scoring, ELO ranking,
document-anchored prompt building).
"""

__version__ = "0.1.0"

from lineval.align import AlignmentScore, align_score
from lineval.anchor import (
    AnchorLayout,
    ConverterPolicy,
    PageResponse,
    PageTask,
    build_anchor,
    build_prompt,
    convert_page,
    validate_response,
)
from lineval.checks import (
    MatchResult,
    check_absence,
    check_baseline,
    check_order,
    check_presence,
    check_table,
    extract_tables,
    fuzzy_find,
)
from lineval.checks.math import SymbolBox, SymbolLayout, check_math, match_formula
from lineval.corpus import (
    CandidateDocument,
    Corpus,
    TestCase,
    attach_baseline_tests,
    load_corpus,
)
from lineval.elo import EloResult, Judgment, compute_elo, elo_ci
from lineval.normalize import NormalizedText, normalize
from lineval.render import BridgeRenderer, FixtureRenderer, RendererPool
from lineval.runner import RunResult, bootstrap_ci, run

__all__ = [
    "__version__",
    "normalize", "NormalizedText",
    "TestCase", "Corpus", "CandidateDocument", "load_corpus", "attach_baseline_tests",
    "MatchResult", "fuzzy_find", "check_presence", "check_absence", "check_order",
    "check_baseline", "check_table", "extract_tables", "check_math", "match_formula",
    "SymbolBox", "SymbolLayout",
    "BridgeRenderer", "FixtureRenderer", "RendererPool",
    "run", "RunResult", "bootstrap_ci",
    "AnchorLayout", "PageResponse", "ConverterPolicy", "PageTask",
    "build_anchor", "build_prompt", "validate_response", "convert_page",
    "AlignmentScore", "align_score",
    "Judgment", "EloResult", "compute_elo", "elo_ci",
]
