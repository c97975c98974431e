from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lineval.checks.math import SymbolBox, SymbolLayout
from lineval.corpus import CandidateDocument


def make_doc(raw: str, pdf: str = "doc.pdf", page: int = 1, tool: str = "toolA") -> CandidateDocument:
    return CandidateDocument.from_raw(pdf, page, raw, tool=tool)


def write_corpus(
    root: Path,
    tests_by_source: dict[str, list[dict]],
    flags: dict | None = None,
) -> Path:
    """Materialize a corpus directory: one JSONL per source plus pdfs/."""
    root.mkdir(parents=True, exist_ok=True)
    pdfs = root / "pdfs"
    pdfs.mkdir(exist_ok=True)
    for source, tests in tests_by_source.items():
        lines = []
        for obj in tests:
            (pdfs / obj["pdf"]).touch()
            lines.append(json.dumps(obj))
        (root / f"{source}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if flags:
        (root / "flags.json").write_text(json.dumps(flags), encoding="utf-8")
    return root


def random_layout(rng: random.Random, n_symbols: int, glyphs: str = "xy12+") -> SymbolLayout:
    boxes = []
    for _ in range(n_symbols):
        x0 = rng.uniform(0, 80)
        y0 = rng.uniform(0, 40)
        w = rng.uniform(4, 12)
        h = rng.uniform(6, 16)
        boxes.append(SymbolBox(glyph=rng.choice(glyphs), x0=x0, y0=y0, x1=x0 + w, y1=y0 + h))
    return SymbolLayout(symbols=tuple(boxes))


@pytest.fixture
def doc_factory():
    return make_doc
