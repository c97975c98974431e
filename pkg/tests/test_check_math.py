from __future__ import annotations

import random

import pytest

from conftest import make_doc, random_layout
from lineval.checks.math import (
    RendererUnavailable,
    SymbolBox,
    SymbolLayout,
    check_math,
    default_tau,
    extract_candidate_equations,
    fold_glyph,
    match_formula,
    match_formula_detailed,
    relation_graph,
)
from lineval.corpus import TestCase
from lineval.render import FixtureRenderer
from oracles import exhaustive_formula_match


@pytest.fixture(scope="module")
def renderer():
    return FixtureRenderer()


def math_tc(latex: str) -> TestCase:
    return TestCase(id="m1", pdf="d.pdf", page=1, category="math", source="s", math=latex)


def box(glyph, x, y, w=8.0, h=10.0):
    return SymbolBox(glyph=glyph, x0=x, y0=y, x1=x + w, y1=y + h)


def test_extract_inline_dollar():
    assert extract_candidate_equations(make_doc("text $x^2$ more")) == [("x^2", False)]


def test_extract_mixed_delimiters():
    found = extract_candidate_equations(make_doc("$$a$$ and \\(b\\) and \\[c\\]"))
    assert found == [("a", True), ("b", False), ("c", True)]


def test_extract_code_fence_excluded():
    assert extract_candidate_equations(make_doc("```$no$```")) == []
    assert extract_candidate_equations(make_doc("```\n$no$\n```\n$yes$")) == [("yes", False)]


def test_extract_dedup_preserves_order():
    found = extract_candidate_equations(make_doc("$x$ then $y$ then $x$"))
    assert found == [("x", False), ("y", False)]


def test_relation_graph_left_of():
    layout = SymbolLayout(symbols=(box("a", 10, 0), box("b", 50, 0)))
    graph = relation_graph(layout, tau=3.0)
    assert graph.has(0, 1, "left-of")
    assert not graph.has(1, 0, "left-of")
    assert not graph.has(0, 1, "above") and not graph.has(1, 0, "above")


def test_relation_graph_within_tau_no_edge():
    layout = SymbolLayout(symbols=(box("a", 10, 0), box("b", 12, 0)))
    graph = relation_graph(layout, tau=5.0)
    assert not graph.has(0, 1, "left-of") and not graph.has(1, 0, "left-of")


def test_relation_graph_above():
    layout = SymbolLayout(symbols=(box("3", 20, 0), box("3", 20, 30)))
    graph = relation_graph(layout, tau=3.0)
    assert graph.has(0, 1, "above") and not graph.has(1, 0, "above")


def test_superscript_subscript_have_different_graphs(renderer):
    sup = renderer.render_layout("x^i", display=True)
    sub = renderer.render_layout("x_i", display=True)
    tau = default_tau(sup)
    g_sup = relation_graph(sup, tau)
    g_sub = relation_graph(sub, tau)
    assert g_sup.edges != g_sub.edges


def test_match_reflexive_on_fixtures(renderer):
    for latex in ("x", "x^2", "\\int_{-3}^{3} x^2 dx", "\\frac{a}{b}", "E = mc^2"):
        layout = renderer.render_layout(latex, display=True)
        assert match_formula(layout, layout)


def test_exponent_order_matters(renderer):
    ref = renderer.render_layout("x^2", display=True)
    cand = renderer.render_layout("2^x", display=True)
    tau = default_tau(ref)
    assert not match_formula(ref, cand)
    assert not exhaustive_formula_match(ref, cand, tau)


def test_superscript_subscript_cross_pairs_rejected(renderer):
    pairs = [("x^i", "x_i"), ("a^b", "a_b"), ("y^n", "y_n")]
    for sup_latex, sub_latex in pairs:
        sup = renderer.render_layout(sup_latex, display=True)
        sub = renderer.render_layout(sub_latex, display=True)
        assert match_formula(sup, sup) and match_formula(sub, sub)
        assert not match_formula(sup, sub)
        assert not match_formula(sub, sup)


def test_reference_inside_longer_candidate(renderer):
    ref = renderer.render_layout("\\int_{-3}^{3} x^2 dx", display=True)
    longer = renderer.render_layout("g(x) + f(x) = \\int_{-3}^{3} x^2 dx + C", display=True)
    assert match_formula(ref, longer)


def test_subset_monotonicity():
    rng = random.Random(9)
    for _ in range(50):
        cand = random_layout(rng, rng.randrange(2, 6))
        ref = SymbolLayout(symbols=cand.symbols[: rng.randrange(1, len(cand.symbols))])
        if match_formula(ref, cand):
            extra = cand.symbols + (box("z", rng.uniform(0, 100), rng.uniform(0, 50)),)
            assert match_formula(ref, SymbolLayout(symbols=extra))


def test_glyph_fold_minus_variants():
    assert fold_glyph("−") == "-"
    a = SymbolLayout(symbols=(box("−", 0, 0),))
    b = SymbolLayout(symbols=(box("-", 0, 0),))
    assert match_formula(a, b) and match_formula(b, a)


def test_budget_exhaustion_is_soft_failure():
    # 8 identical glyphs all mutually within tau: factorial search space,
    # no consistent full mapping; a tiny budget must bail out, not hang.
    symbols = tuple(box("q", i * 0.01, 0) for i in range(8))
    ref = SymbolLayout(symbols=tuple(box("q", i * 30.0, 0) for i in range(8)))
    cand = SymbolLayout(symbols=symbols)
    matched, exhausted = match_formula_detailed(ref, cand, tau=1.0, budget=50)
    assert not matched and exhausted


def test_matcher_agrees_with_exhaustive_oracle():
    rng = random.Random(10)
    for _ in range(300):
        ref = random_layout(rng, rng.randrange(1, 5), glyphs="xy1")
        cand = random_layout(rng, rng.randrange(1, 8), glyphs="xy1")
        tau = 4.0
        assert match_formula(ref, cand, tau=tau) == exhaustive_formula_match(ref, cand, tau)


def test_check_math_verbatim(renderer):
    doc = make_doc("Some text $$\\int_{-3}^{3} x^2 dx$$ end")
    assert check_math(math_tc("\\int_{-3}^{3} x^2 dx"), doc, renderer).passed


def test_check_math_prose_only(renderer):
    assert not check_math(math_tc("x^2"), make_doc("no equations at all"), renderer).passed


def test_check_math_spacing_variant(renderer):
    doc = make_doc("inline $x^2\\, +\\; 1$ here")
    assert check_math(math_tc("x^2 + 1"), doc, renderer).passed


def test_check_math_skips_unrenderable_candidates(renderer):
    doc = make_doc("$\\badmacro{x}$ then $x^2$")
    assert check_math(math_tc("x^2"), doc, renderer).passed


def test_check_math_unrecorded_candidates_skipped(renderer):
    doc = make_doc("$totally unknown latex$ and $x^2$")
    assert check_math(math_tc("x^2"), doc, renderer).passed


def test_check_math_renderer_unavailable_is_error():
    class DeadRenderer:
        def render_layout(self, latex, display=False):
            raise RendererUnavailable("bridge down")

    with pytest.raises(RendererUnavailable):
        check_math(math_tc("x^2"), make_doc("$x^2$"), DeadRenderer())


def test_default_tau_quarter_median_height():
    layout = SymbolLayout(symbols=(box("a", 0, 0, h=8), box("b", 20, 0, h=16), box("c", 40, 0, h=12)))
    assert default_tau(layout) == pytest.approx(0.25 * 12)
