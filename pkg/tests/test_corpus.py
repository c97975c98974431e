from __future__ import annotations

import json

import pytest

from conftest import write_corpus
from lineval.corpus import (
    CorpusError,
    attach_baseline_tests,
    dump_test_case,
    load_corpus,
    load_outputs_dir,
)


def minimal(id: str, pdf: str = "a.pdf", page: int = 1, **extra) -> dict:
    obj = {"id": id, "pdf": pdf, "page": page, "type": "present", "text": "hello"}
    obj.update(extra)
    return obj


def test_two_sources_three_tests_each(tmp_path):
    corpus = load_corpus(write_corpus(tmp_path / "c", {
        "src1": [minimal("a1"), minimal("a2"), minimal("a3")],
        "src2": [minimal("b1", "b.pdf"), minimal("b2", "b.pdf"), minimal("b3", "b.pdf")],
    }))
    assert corpus.source_counts == {"src1": 3, "src2": 3}
    assert not corpus.warnings


def test_missing_category_reports_line(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("x1")]})
    lines = (root / "src.jsonl").read_text().splitlines()
    bad = json.loads(lines[0])
    del bad["type"]
    (root / "src.jsonl").write_text(lines[0] + "\n" + json.dumps(bad) + "\n")
    with pytest.raises(CorpusError, match=r"src\.jsonl:2"):
        load_corpus(root, strict=True)
    corpus = load_corpus(root)
    assert any("src.jsonl:2" in w for w in corpus.warnings)


def test_malformed_json_line(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("x1")]})
    with (root / "src.jsonl").open("a") as fh:
        fh.write("{not json\n")
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 1
    assert any("malformed JSON" in w for w in corpus.warnings)


def test_unknown_category(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("x1", type="bogus")]})
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 0
    assert any("unknown category" in w for w in corpus.warnings)


def test_duplicate_id_rejected(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("dup"), minimal("dup")]})
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 1
    assert any("duplicate" in w for w in corpus.warnings)


def test_unknown_key_is_warning_not_error(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("x1", extra_key=1)]})
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 1
    assert any("unknown key" in w for w in corpus.warnings)


def test_dangling_pdf_path(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("x1")]})
    (root / "pdfs" / "a.pdf").unlink()
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 0
    assert any("not found" in w for w in corpus.warnings)


def test_page_and_window_validation(tmp_path):
    root = write_corpus(tmp_path / "c", {
        "src": [minimal("p0", page=0), minimal("w0", first_n=0), minimal("ok")],
    })
    corpus = load_corpus(root)
    assert corpus.source_counts["src"] == 1
    assert len(corpus.warnings) == 2


def test_round_trip_canonical(tmp_path):
    tests = [
        minimal("r1", max_diffs=2, first_n=100, case_sensitive=False, url="http://x"),
        {"id": "r2", "pdf": "a.pdf", "page": 2, "type": "order", "before": "x", "after": "y"},
        {"id": "r3", "pdf": "a.pdf", "page": 3, "type": "table", "cell": "1.96", "up": "A"},
    ]
    root = write_corpus(tmp_path / "c", {"src": tests})
    corpus = load_corpus(root)
    dumped = [dump_test_case(t) for t in corpus.sources["src"]]
    reroot = write_corpus(tmp_path / "c2", {"src": []})
    (reroot / "src.jsonl").write_text("\n".join(dumped) + "\n")
    (reroot / "pdfs" / "a.pdf").touch()
    again = load_corpus(reroot)
    assert [dump_test_case(t) for t in again.sources["src"]] == dumped


def test_attach_baseline_counts(tmp_path):
    root = write_corpus(tmp_path / "c", {
        "src": [minimal("a1", page=1), minimal("a2", page=1), minimal("a3", page=2)],
    })
    corpus = attach_baseline_tests(load_corpus(root))
    assert corpus.source_counts["baseline"] == 2
    pages = {(t.pdf, t.page) for t in corpus.sources["baseline"]}
    assert pages == {("a.pdf", 1), ("a.pdf", 2)}


def test_attach_baseline_cjk_flag(tmp_path):
    root = write_corpus(
        tmp_path / "c",
        {"src": [minimal("a1", page=1), minimal("a2", pdf="j.pdf", page=3)]},
        flags={"cjk_ok": [["j.pdf", 3]]},
    )
    corpus = attach_baseline_tests(load_corpus(root))
    by_page = {(t.pdf, t.page): t for t in corpus.sources["baseline"]}
    assert by_page[("j.pdf", 3)].cjk_ok
    assert not by_page[("a.pdf", 1)].cjk_ok


def test_attach_baseline_empty_corpus(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": []})
    corpus = attach_baseline_tests(load_corpus(root))
    assert "baseline" not in corpus.sources


def test_attach_baseline_respects_explicit_rows(tmp_path):
    root = write_corpus(tmp_path / "c", {
        "src": [minimal("a1"), {"id": "bl", "pdf": "a.pdf", "page": 1, "type": "baseline"}],
    })
    corpus = attach_baseline_tests(load_corpus(root))
    baseline_tests = [t for t in corpus.all_tests() if t.category == "baseline"]
    assert len(baseline_tests) == 1
    assert baseline_tests[0].id == "bl"


def test_attach_is_idempotent(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("a1")]})
    once = attach_baseline_tests(load_corpus(root))
    twice = attach_baseline_tests(once)
    assert once.source_counts == twice.source_counts


def test_table4_shaped_corpus_counts(tmp_path):
    shape = {
        "arxiv_math": 2927, "old_scans_math": 458, "tables": 1020, "old_scans": 526,
        "headers_footers": 753, "multi_column": 884, "long_tiny_text": 442,
    }
    tests_by_source = {
        source: [minimal(f"{source}-{i}", pdf=f"{source}.pdf", page=(i % 40) + 1)
                 for i in range(count)]
        for source, count in shape.items()
    }
    corpus = load_corpus(write_corpus(tmp_path / "big", tests_by_source))
    assert corpus.source_counts == shape
    assert sum(corpus.source_counts.values()) == 7010


def test_load_outputs_dir_naming(tmp_path):
    root = write_corpus(tmp_path / "c", {"src": [minimal("a1", page=2)]})
    corpus = load_corpus(root)
    out = tmp_path / "out"
    out.mkdir()
    (out / "a_pg2.md").write_text("content here")
    docs = load_outputs_dir(out, corpus, tool="t")
    assert ("a.pdf", 2) in docs
    assert docs[("a.pdf", 2)].normalized.value == "content here"
