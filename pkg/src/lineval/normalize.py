"""Canonical string normalization applied before any text comparison.

Every check compares *normalized* text on both sides, so test authors and
tool outputs only have to agree up to markup and typography: ``<br>`` tags,
Markdown emphasis, curly quotes, exotic dashes, and whitespace runs are all
folded to a canonical ASCII-leaning form (content characters are otherwise
preserved, in Unicode NFC).

The normalization stages run in a fixed, documented order:

1. ``<br>`` / ``<br/>`` / ``<br />``  ->  newline
2. Unicode NFC
3. quote/hyphen ASCII folding (curly quotes, U+2010..U+2015, U+2212; the
   soft hyphen U+00AD is deleted)
4. Markdown emphasis stripping (paired ``**``/``__``/``*``/``_`` spans
   within a single line; unpaired markers stay literal)
5. whitespace collapsing (any run containing a line break becomes one
   ``\\n``, any other run becomes one ASCII space; ends are trimmed)

The pipeline is run to a fixed point, which makes ``normalize`` a
projection: applying it twice is the same as applying it once.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

__all__ = ["NormalizedText", "normalize"]


_BR_RE = re.compile(r"<br\s*/?\s*>", re.IGNORECASE)

# Curly single/double quotes and their low/high cousins.
_QUOTE_MAP = {
    "‘": "'",
    "’": "'",
    "‚": "'",
    "‛": "'",
    "“": '"',
    "”": '"',
    "„": '"',
    "‟": '"',
}

# Hyphen-role characters: U+2010..U+2015 plus the minus sign U+2212.
_HYPHEN_MAP = {c: "-" for c in "‐‑‒–—―−"}

_FOLD_TABLE = str.maketrans({**_QUOTE_MAP, **_HYPHEN_MAP, "­": None})

# Paired emphasis within one line.  Double markers first so that `**x**`
# is not eaten as two italic spans.  Single `*`/`_` require a non-word
# context outside the span, which keeps snake_case identifiers intact.
_EMPHASIS_RES = (
    re.compile(r"\*\*(?=\S)([^\n]+?)(?<=\S)\*\*"),
    re.compile(r"__(?=\S)([^\n]+?)(?<=\S)__"),
    re.compile(r"(?<![\w*])\*(?=[^\s*])([^*\n]+?)(?<=[^\s*])\*(?![\w*])"),
    re.compile(r"(?<![\w_])_(?=[^\s_])([^_\n]+?)(?<=[^\s_])_(?![\w_])"),
)

_WS_RUN_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizedText:
    """A string in canonical comparison form.

    ``value`` is NFC, free of Markdown emphasis markers and curly
    quotes/dashes, and has canonical whitespace (single spaces, single
    newlines).  ``source_len`` records the character count of the raw
    input the value was derived from.
    """

    value: str
    source_len: int

    def __str__(self) -> str:
        return self.value

    def __len__(self) -> int:
        return len(self.value)


def _strip_emphasis(text: str) -> str:
    for pattern in _EMPHASIS_RES:
        text = pattern.sub(r"\1", text)
    return text


def _collapse_ws_run(match: re.Match) -> str:
    return "\n" if any(ch in "\n\r\v\f  " for ch in match.group(0)) else " "


def _normalize_once(text: str) -> str:
    text = _BR_RE.sub("\n", text)
    text = unicodedata.normalize("NFC", text)
    text = text.translate(_FOLD_TABLE)
    text = _strip_emphasis(text)
    text = _WS_RUN_RE.sub(_collapse_ws_run, text)
    return text.strip()


def normalize(raw: str, collapse_newlines: bool = False) -> NormalizedText:
    """Normalize ``raw`` into canonical comparison form.

    Total function: any Unicode string in, canonical form out.  With
    ``collapse_newlines`` every line break folds to a space as well,
    producing a single-line canonical form.

    The stage pipeline is re-applied until the text stops changing
    (stripping emphasis can expose new whitespace runs or marker pairs),
    so the result is always a fixed point of ``normalize``.
    """
    text = raw
    # Each pass either shortens the text or leaves it unchanged, so this
    # terminates; in practice the second pass is already a no-op.
    for _ in range(10):
        new = _normalize_once(text)
        if new == text:
            break
        text = new
    if collapse_newlines:
        text = text.replace("\n", " ")
    return NormalizedText(value=text, source_len=len(raw))
