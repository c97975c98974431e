from __future__ import annotations

import random

from conftest import make_doc
from lineval.checks.table import TableRelationTest, check_table, extract_tables

MD_2X2 = """
| A | B |
|---|---|
| 1 | 2 |
"""

HTML_COLSPAN = """
<table>
 <tr><td colspan="2">H</td></tr>
 <tr><td>1.1</td><td>2.2</td></tr>
</table>
"""


def test_markdown_2x2():
    grids = extract_tables(make_doc(MD_2X2))
    assert len(grids) == 1
    grid = grids[0]
    assert grid.n_rows == 2 and grid.n_cols == 2
    assert grid.cells == {(0, 0): "A", (0, 1): "B", (1, 0): "1", (1, 1): "2"}


def test_html_colspan_duplicates_text():
    grid = extract_tables(make_doc(HTML_COLSPAN))[0]
    assert grid.get(0, 0) == "H" and grid.get(0, 1) == "H"
    assert grid.get(1, 0) == "1.1" and grid.get(1, 1) == "2.2"


def test_html_rowspan():
    html = """
    <table>
     <tr><td rowspan="2">R</td><td>x</td></tr>
     <tr><td>y</td></tr>
    </table>
    """
    grid = extract_tables(make_doc(html))[0]
    assert grid.get(0, 0) == "R" and grid.get(1, 0) == "R"
    assert grid.get(0, 1) == "x" and grid.get(1, 1) == "y"


def test_no_tables():
    assert extract_tables(make_doc("plain prose, no pipes, no html")) == []


def test_alignment_row_not_cells():
    grid = extract_tables(make_doc("| H1 | H2 |\n|:---|---:|\n| a | b |"))[0]
    assert grid.n_rows == 2
    assert grid.get(1, 0) == "a"


def test_escaped_pipe_stays_in_cell():
    grid = extract_tables(make_doc("| a\\|b | c |\n|---|---|\n| 1 | 2 |"))[0]
    assert grid.get(0, 0) == "a|b"


def test_pipe_table_inside_code_fence_ignored():
    doc = make_doc("```\n| a | b |\n| 1 | 2 |\n```")
    assert extract_tables(doc) == []


def test_malformed_table_skipped_with_diagnostic():
    # C starts at the first free column (0) and its colspan collides with
    # A's rowspan cell at (1,1): unsatisfiable, so the table is skipped.
    html = """
    <table>
     <tr><td>X</td><td rowspan="2">A</td></tr>
     <tr><td colspan="2">C</td></tr>
    </table>
    """
    diags = []
    grids = extract_tables(make_doc(html), diags)
    assert grids == []
    assert any("overlapping" in d for d in diags)


def test_span_conservation():
    rng = random.Random(7)
    for _ in range(50):
        n_cols = rng.randrange(1, 6)
        n_rows = rng.randrange(1, 6)
        rows, total = [], 0
        for _r in range(n_rows):
            row, used = [], 0
            while used < n_cols:
                span = rng.randrange(1, n_cols - used + 1)
                row.append(f'<td colspan="{span}">c{used}</td>')
                total += span
                used += span
            rows.append("<tr>" + "".join(row) + "</tr>")
        grid = extract_tables(make_doc("<table>" + "".join(rows) + "</table>"))[0]
        assert len(grid.cells) == total


def test_relation_duality_on_full_grids():
    from lineval.checks.table import _relation_text

    rng = random.Random(8)
    for _ in range(20):
        n = rng.randrange(2, 5)
        m = rng.randrange(2, 5)
        md = "\n".join("| " + " | ".join(f"c{r}x{c}" for c in range(m)) + " |" for r in range(n))
        grid = extract_tables(make_doc(md))[0]
        for r in range(n):
            for c in range(m):
                here = grid.get(r, c)
                below = grid.get(r + 1, c)
                if below is not None:
                    assert _relation_text(grid, r + 1, c, "up") == here
                    assert _relation_text(grid, r, c, "down") == below


def test_markdown_html_agreement():
    md = "| A | B |\n|---|---|\n| 1 | 2 |"
    html = "<table><tr><td>A</td><td>B</td></tr><tr><td>1</td><td>2</td></tr></table>"
    grid_md = extract_tables(make_doc(md))[0]
    grid_html = extract_tables(make_doc(html))[0]
    assert grid_md.cells == grid_html.cells


def test_check_table_up_relation():
    doc = make_doc("<table><tr><td></td><td>A</td></tr><tr><td>X</td><td>1.96</td></tr></table>")
    assert check_table(TableRelationTest(cell="1.96", up="A"), doc).passed
    assert not check_table(TableRelationTest(cell="1.96", up="X"), doc).passed


def test_check_table_left_right_inverse_fails():
    # 1.96 sits to the LEFT of 0.001; claiming 0.001 is to its left must fail.
    doc = make_doc("| 1.96 | 0.001 |\n|---|---|\n| a | b |")
    assert check_table(TableRelationTest(cell="1.96", right="0.001"), doc).passed
    assert not check_table(TableRelationTest(cell="1.96", left="0.001"), doc).passed


def test_check_table_colspan_header_covers_both_columns():
    doc = make_doc(HTML_COLSPAN)
    assert check_table(TableRelationTest(cell="1.1", up="H"), doc).passed
    assert check_table(TableRelationTest(cell="2.2", up="H"), doc).passed


def test_check_table_headings_skip_empty_cells():
    html = """
    <table>
     <tr><td>Head</td></tr>
     <tr><td></td></tr>
     <tr><td>value</td></tr>
    </table>
    """
    doc = make_doc(html)
    assert check_table(TableRelationTest(cell="value", top_heading="Head"), doc).passed
    wide = "<table><tr><td>L</td><td></td><td>v2</td></tr></table>"
    assert check_table(TableRelationTest(cell="v2", left_heading="L"), make_doc(wide)).passed


def test_check_table_any_matching_cell_passes():
    # two cells say "dup"; only one has the right neighbor
    doc = make_doc("| dup | no |\n|---|---|\n| dup | yes |")
    assert check_table(TableRelationTest(cell="dup", right="yes"), doc).passed


def test_check_table_missing_neighbor_fails():
    doc = make_doc("| only |\n|---|\n| x |")
    assert not check_table(TableRelationTest(cell="only", up="anything"), doc).passed


def test_check_table_fuzzy_cell_budget():
    doc = make_doc("| 4.5% |\n|---|\n| 2.4% |")
    assert check_table(TableRelationTest(cell="4.5%", down="2.4%"), doc).passed
    assert check_table(TableRelationTest(cell="4.5", down="2.4%"), doc).passed  # containment
    assert not check_table(TableRelationTest(cell="9.9%", down="2.4%"), doc).passed
