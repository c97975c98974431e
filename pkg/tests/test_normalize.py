from __future__ import annotations

import random
import re
import unicodedata

import pytest

from lineval.normalize import normalize


def test_br_variants_become_newlines():
    assert normalize("a<br>b").value == "a\nb"
    assert normalize("a<br/>b").value == "a\nb"
    assert normalize("a<br />b").value == "a\nb"
    assert normalize("a<BR>b").value == "a\nb"


def test_emphasis_and_quotes():
    assert normalize("**bold** and “quoted”").value == 'bold and "quoted"'
    assert normalize("__also bold__ *it* _em_").value == "also bold it em"


def test_empty_is_fixed_point():
    assert normalize("").value == ""


def test_nfc_composition():
    assert normalize("é").value == "é"
    assert unicodedata.is_normalized("NFC", normalize("éff́ab").value)


def test_hyphen_and_quote_folding():
    for dash in "‐‑‒–—―−":
        assert normalize(f"a{dash}b").value == "a-b"
    assert normalize("don’t ‘x’").value == "don't 'x'"
    assert normalize("soft­hyphen").value == "softhyphen"


def test_snake_case_survives_emphasis_stripping():
    assert normalize("my_var_name and other_thing").value == "my_var_name and other_thing"
    assert normalize("a*b*c stays a*b*c? no: intraword").value.startswith("a*b*c")


def test_unpaired_markers_kept_literal():
    assert normalize("2 * 3 = 6").value == "2 * 3 = 6"
    assert normalize("lonely ** marker").value == "lonely ** marker"


def test_whitespace_collapsing():
    assert normalize("a  \t b").value == "a b"
    assert normalize("a \r\n b").value == "a\nb"
    assert normalize("a\n\n\nb").value == "a\nb"
    assert normalize("  padded  ").value == "padded"
    assert normalize("a b").value == "a b"


def test_collapse_newlines_flag():
    assert normalize("a\nb\nc", collapse_newlines=True).value == "a b c"


def test_source_len_counts_raw_characters():
    raw = "**bold**"
    assert normalize(raw).source_len == len(raw)


def test_no_double_spaces_ever():
    tricky = "a  b\t\tc —  d **x**  y"
    value = normalize(tricky).value
    assert "  " not in value
    assert "\t" not in value and "\r" not in value


NASTY = [
    "* *a* *",
    "***a***",
    "**a *b* c**",
    "_ _x_ _",
    "a ** b ** c",
    "*a**b*",
    "** **",
    "_*mixed*_",
]


@pytest.mark.parametrize("raw", NASTY)
def test_idempotence_on_nasty_markers(raw):
    once = normalize(raw).value
    assert normalize(once).value == once


def test_idempotence_fuzz():
    rng = random.Random(1)
    alphabet = "ab *_\t\n“—<br>é$|5"
    for _ in range(2000):
        raw = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 40)))
        once = normalize(raw).value
        assert normalize(once).value == once
        assert not re.search(r"  ", once)
        assert unicodedata.is_normalized("NFC", once)
