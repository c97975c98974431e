#!/usr/bin/env python3
"""Regenerate src/lineval/data/recorded_renders.json.

The recorded-fixture renderer replays these canned symbol layouts so the
Python test suite and demos run without the rendering bridge.  Layouts
are produced by a tiny deterministic typesetter for the LaTeX subset the
fixtures use; geometry follows standard math layout conventions
(superscripts raised and shrunk, subscripts lowered, integral bounds
upper-right/lower-right, fraction parts stacked), with y growing
downward like rendered client boxes.

Run from the repo root:  python tools/record_fixture_renders.py
"""

from __future__ import annotations

import json
import re
from pathlib import Path

BASELINE = 100.0
CHAR_H = 18.0
CHAR_W = 10.0
ADVANCE = 12.0
SCRIPT_SCALE = 0.66

GREEK = {
    "alpha": "α", "beta": "β", "gamma": "γ", "delta": "δ",
    "epsilon": "ε", "theta": "θ", "lambda": "λ", "mu": "μ",
    "pi": "π", "sigma": "σ", "tau": "τ", "phi": "φ",
    "xi": "ξ", "omega": "ω",
}
SYMBOLS = {
    "int": "∫", "sum": "∑", "prod": "∏", "infty": "∞",
    "cdot": "⋅", "times": "×", "pm": "±", "le": "≤",
    "ge": "≥", "ne": "≠", "to": "→", "partial": "∂",
    "approx": "≈", "equiv": "≡",
}
BIG_OPS = {"∫", "∑", "∏"}
SPACING = {",": 3.0, ";": 5.0, ":": 4.0, "!": 0.0, "quad": 18.0, "qquad": 36.0, " ": 6.0}
TRANSPARENT = {"mathrm", "mathbf", "mathit", "text", "operatorname", "left", "right", "displaystyle"}

_TOKEN_RE = re.compile(r"\\[a-zA-Z]+|\\.|[{}^_]|\s+|.", re.DOTALL)


class ParseError(ValueError):
    pass


def tokenize(latex: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(latex)]


class Layouter:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0
        self.boxes: list[dict] = []

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def emit(self, glyph: str, x: float, baseline: float, scale: float,
             height: float = CHAR_H, depth: float = 0.0, width: float = CHAR_W) -> float:
        self.boxes.append({
            "g": glyph,
            "x0": round(x, 2),
            "y0": round(baseline - height * scale, 2),
            "x1": round(x + width * scale, 2),
            "y1": round(baseline + depth * scale, 2),
        })
        return width * scale

    def group_tokens(self) -> list[str]:
        """Tokens of a {...} group, or the single next token."""
        tok = self.next()
        if tok != "{":
            return [tok]
        depth, out = 1, []
        while depth:
            tok = self.next()
            if tok == "{":
                depth += 1
            elif tok == "}":
                depth -= 1
                if depth == 0:
                    break
            out.append(tok)
        return out

    def layout(self, x: float, baseline: float, scale: float) -> float:
        """Typeset self.tokens from x; returns the end x coordinate."""
        while self.peek() is not None:
            x = self.atom(x, baseline, scale)
        return x

    def sublayout(self, tokens: list[str], x: float, baseline: float, scale: float) -> float:
        inner = Layouter(tokens)
        end = inner.layout(x, baseline, scale)
        self.boxes.extend(inner.boxes)
        return end

    def atom(self, x: float, baseline: float, scale: float) -> float:
        tok = self.next()
        if tok.isspace():
            return x
        if tok in ("}",):
            raise ParseError("unbalanced brace")
        if tok in ("^", "_"):
            raise ParseError("script with no base")

        advance = 0.0
        if tok == "{":
            self.pos -= 1
            group = self.group_tokens()
            x_end = self.sublayout(group, x, baseline, scale)
            advance = x_end - x
        elif tok.startswith("\\"):
            name = tok[1:]
            if name in SPACING:
                advance = SPACING[name] * scale
            elif name in TRANSPARENT:
                if name in ("text", "mathrm", "mathbf", "mathit", "operatorname"):
                    group = self.group_tokens()
                    x_end = self.sublayout(group, x, baseline, scale)
                    advance = x_end - x
                # \left, \right, \displaystyle: no box, no advance
            elif name == "frac":
                advance = self.frac(x, baseline, scale)
            elif name == "sqrt":
                group = self.group_tokens()
                x_end = self.sublayout(group, x, baseline, scale)
                advance = x_end - x
            elif name in GREEK:
                advance = self.emit(GREEK[name], x, baseline, scale) + 2.0 * scale
            elif name in SYMBOLS:
                glyph = SYMBOLS[name]
                if glyph in BIG_OPS:
                    advance = self.emit(glyph, x, baseline, scale, height=26.0, depth=8.0, width=8.0) + 2.0 * scale
                else:
                    advance = self.emit(glyph, x, baseline, scale, height=14.0, depth=-4.0) + 2.0 * scale
            elif len(name) == 1 and not name.isalpha():
                advance = self.emit(name, x, baseline, scale) + 2.0 * scale
            elif name.isalpha():
                # Multi-character command rendered as text (e.g. \sin):
                # split per character with interpolated boxes.
                cx = x
                for ch in name:
                    cx += self.emit(ch, cx, baseline, scale) + 2.0 * scale
                advance = cx - x
            else:
                raise ParseError(f"unsupported command {tok!r}")
        elif tok == "-":
            advance = self.emit("−", x, baseline, scale, height=11.0, depth=-9.0) + 2.0 * scale
        elif tok in "=+<>":
            advance = self.emit(tok, x, baseline, scale, height=14.0, depth=-4.0) + 2.0 * scale
        else:
            advance = self.emit(tok, x, baseline, scale) + 2.0 * scale

        return self.scripts(x, x + advance, baseline, scale, big_op=self._last_was_big_op())

    def _last_was_big_op(self) -> bool:
        return bool(self.boxes) and self.boxes[-1]["g"] in BIG_OPS

    def scripts(self, x_atom: float, x: float, baseline: float, scale: float, big_op: bool) -> float:
        """Attach ^ and/or _ groups following an atom."""
        sup_tokens = sub_tokens = None
        while self.peek() in ("^", "_"):
            which = self.next()
            group = self.group_tokens()
            if which == "^":
                sup_tokens = group
            else:
                sub_tokens = group
        if sup_tokens is None and sub_tokens is None:
            return x
        sscale = scale * SCRIPT_SCALE
        sup_base = baseline - (14.0 if big_op else 12.0) * scale
        sub_base = baseline + (14.0 if big_op else 6.0) * scale
        x_end = x
        if sup_tokens is not None:
            x_end = max(x_end, self.sublayout(sup_tokens, x, sup_base, sscale))
        if sub_tokens is not None:
            x_end = max(x_end, self.sublayout(sub_tokens, x, sub_base, sscale))
        return x_end + 1.0 * scale

    def frac(self, x: float, baseline: float, scale: float) -> float:
        num = self.group_tokens()
        den = self.group_tokens()
        axis = baseline - 7.0 * scale
        num_l = Layouter(num)
        num_end = num_l.layout(x, axis - 4.0 * scale, scale * 0.9)
        den_l = Layouter(den)
        den_end = den_l.layout(x, axis + 16.0 * scale, scale * 0.9)
        width = max(num_end, den_end) - x
        for part, end in ((num_l, num_end), (den_l, den_end)):
            shift = (width - (end - x)) / 2.0
            for box in part.boxes:
                box["x0"] = round(box["x0"] + shift, 2)
                box["x1"] = round(box["x1"] + shift, 2)
            self.boxes.extend(part.boxes)
        return width + 2.0 * scale


def render(latex: str) -> list[dict]:
    layouter = Layouter(tokenize(latex))
    layouter.layout(10.0, BASELINE, 1.0)
    if not layouter.boxes:
        raise ParseError("no symbols produced")
    return layouter.boxes


FIXTURES = [
    "x",
    "a",
    "b",
    "x^2",
    "2^x",
    "x^i",
    "x_i",
    "a^b",
    "a_b",
    "y^n",
    "y_n",
    "x^2 + 1",
    "x^2\\, +\\; 1",
    "x_1 + x_2",
    "E = mc^2",
    "e^{i\\pi} + 1 = 0",
    "\\int_{-3}^{3} x^2 dx",
    "f(x) = \\int_{-3}^{3} x^2 dx",
    "g(x) + f(x) = \\int_{-3}^{3} x^2 dx + C",
    "\\frac{a}{b}",
    "\\alpha + \\beta = \\gamma",
    "\\sin x",
    "\\sqrt{x^2 + y^2}",
    "\\sum_{k=1}^{n} k^2",
    "T = 2\\pi\\sqrt{L/g}",
]

BROKEN = ["\\badmacro{x}", "x^"]


def main() -> None:
    entries = []
    for latex in FIXTURES:
        boxes = render(latex)
        for display in (True, False):
            entries.append({"latex": latex, "display": display, "ok": True, "symbols": boxes})
    for latex in BROKEN:
        for display in (True, False):
            entries.append({
                "latex": latex,
                "display": display,
                "ok": False,
                "error": f"cannot render {latex!r}",
            })
    out = Path(__file__).resolve().parents[1] / "src" / "lineval" / "data" / "recorded_renders.json"
    out.write_text(json.dumps(entries, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(entries)} recordings to {out}")


if __name__ == "__main__":
    main()
