"""Page layout acquisition: JSON sidecars or a minimal PDF extractor.

Layouts feed the anchor builder.  The preferred path is a sidecar file
(``<pdf>.layout.json``) with the documented schema; as a convenience for
simple born-digital files there is also a small text-operator extractor
that walks uncompressed (or Flate-compressed) content streams and records
the position of each text-showing operator plus image placements.  It
handles the common Tm/Td/TD/T*/Tj/TJ subset only; anything fancier should
ship a sidecar produced by a full PDF library.
"""

from __future__ import annotations

import json
import re
import zlib
from pathlib import Path

from lineval.anchor import AnchorLayout, ImageBox, TextBlock

__all__ = ["load_layout_sidecar", "extract_page_layout", "layout_for_page", "PdfParseError"]


class PdfParseError(ValueError):
    pass


def load_layout_sidecar(path: str | Path) -> AnchorLayout:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return AnchorLayout.from_sidecar(obj)


def layout_for_page(pdf_path: str | Path, page: int) -> AnchorLayout:
    """Sidecar when present, extractor otherwise."""
    pdf_path = Path(pdf_path)
    sidecar = pdf_path.with_suffix(pdf_path.suffix + ".layout.json")
    if sidecar.exists():
        return load_layout_sidecar(sidecar)
    return extract_page_layout(pdf_path, page)


_OBJ_RE = re.compile(rb"(\d+)\s+\d+\s+obj\b(.*?)endobj", re.DOTALL)
_STREAM_RE = re.compile(rb"stream\r?\n(.*?)\r?\nendstream", re.DOTALL)
_MEDIABOX_RE = re.compile(
    rb"/MediaBox\s*\[\s*([\d.+-]+)\s+([\d.+-]+)\s+([\d.+-]+)\s+([\d.+-]+)\s*\]"
)
_CONTENTS_RE = re.compile(rb"/Contents\s+(\d+)\s+\d+\s+R")


def _decode_pdf_string(raw: bytes) -> str:
    out = []
    i = 0
    while i < len(raw):
        b = raw[i]
        if b == 0x5C and i + 1 < len(raw):  # backslash escape
            nxt = raw[i + 1]
            i += 2
            mapping = {0x6E: "\n", 0x72: "\r", 0x74: "\t", 0x62: "\b", 0x66: "\f"}
            if nxt in mapping:
                out.append(mapping[nxt])
            elif 0x30 <= nxt <= 0x37:  # octal, up to 3 digits
                digits = chr(nxt)
                while i < len(raw) and len(digits) < 3 and 0x30 <= raw[i] <= 0x37:
                    digits += chr(raw[i])
                    i += 1
                out.append(chr(int(digits, 8)))
            else:
                out.append(chr(nxt))
        else:
            out.append(chr(b))
            i += 1
    return "".join(out)


def _tokenize_content(data: bytes):
    """Yield ('str'|'num'|'name'|'op'|'arr', value) tokens of a content stream."""
    i, n = 0, len(data)
    while i < n:
        b = data[i]
        if b in b" \t\r\n\x00":
            i += 1
        elif b == 0x28:  # (
            depth, j, buf = 1, i + 1, bytearray()
            while j < n and depth:
                c = data[j]
                if c == 0x5C and j + 1 < n:
                    buf += data[j:j + 2]
                    j += 2
                    continue
                if c == 0x28:
                    depth += 1
                elif c == 0x29:
                    depth -= 1
                    if depth == 0:
                        break
                buf.append(c)
                j += 1
            yield "str", _decode_pdf_string(bytes(buf))
            i = j + 1
        elif b == 0x3C and i + 1 < n and data[i + 1] != 0x3C:  # <hex>
            j = data.index(b">", i)
            hexstr = re.sub(rb"\s", b"", data[i + 1:j])
            if len(hexstr) % 2:
                hexstr += b"0"
            yield "str", bytes.fromhex(hexstr.decode("ascii")).decode("latin-1")
            i = j + 1
        elif b == 0x5B:  # [
            yield "arr", "["
            i += 1
        elif b == 0x5D:
            yield "arr", "]"
            i += 1
        elif b == 0x2F:  # /Name
            j = i + 1
            while j < n and data[j] not in b" \t\r\n[]<>(/":
                j += 1
            yield "name", data[i + 1:j].decode("latin-1")
            i = j
        elif b in b"+-.0123456789":
            j = i + 1
            while j < n and data[j] in b"+-.0123456789":
                j += 1
            try:
                yield "num", float(data[i:j])
            except ValueError:
                pass
            i = j
        elif b == 0x3C:  # << dict in content stream (BDC etc.): skip token
            i += 2
        elif data[i:i + 2] == b">>":
            i += 2
        else:
            j = i + 1
            while j < n and data[j] not in b" \t\r\n\x00[]<>(/+-.0123456789":
                j += 1
            yield "op", data[i:j].decode("latin-1")
            i = j


def _find_objects(data: bytes) -> dict[int, bytes]:
    return {int(m.group(1)): m.group(2) for m in _OBJ_RE.finditer(data)}


def _object_stream(body: bytes) -> bytes:
    m = _STREAM_RE.search(body)
    if m is None:
        raise PdfParseError("content object has no stream")
    raw = m.group(1)
    if b"/FlateDecode" in body:
        raw = zlib.decompress(raw)
    elif b"/Filter" in body.split(b"stream", 1)[0]:
        raise PdfParseError("unsupported stream filter (only FlateDecode is handled)")
    return raw


def extract_page_layout(pdf_path: str | Path, page: int) -> AnchorLayout:
    """Positioned text blocks and image boxes of one page (1-based).

    Coordinates are PDF units with the origin at the bottom-left corner,
    exactly as the content stream states them.
    """
    data = Path(pdf_path).read_bytes()
    objects = _find_objects(data)
    pages = [
        body for _num, body in sorted(objects.items())
        if re.search(rb"/Type\s*/Page\b(?!s)", body)
    ]
    if page < 1 or page > len(pages):
        raise PdfParseError(f"page {page} out of range (document has {len(pages)} page objects)")
    body = pages[page - 1]

    box = _MEDIABOX_RE.search(body)
    if box is None:
        for candidate in objects.values():
            if b"/Type" in candidate and b"/Pages" in candidate:
                box = _MEDIABOX_RE.search(candidate)
                if box:
                    break
    width, height = (612.0, 792.0)
    if box is not None:
        x0, y0, x1, y1 = (float(box.group(i)) for i in range(1, 5))
        width, height = x1 - x0, y1 - y0

    streams = []
    for m in _CONTENTS_RE.finditer(body):
        ref = int(m.group(1))
        if ref in objects:
            streams.append(_object_stream(objects[ref]))
    if not streams and _STREAM_RE.search(body):
        streams.append(_object_stream(body))

    blocks: list[TextBlock] = []
    images: list[ImageBox] = []
    for stream in streams:
        _walk_content(stream, blocks, images)
    return AnchorLayout(
        page_width=width,
        page_height=height,
        text_blocks=tuple(blocks),
        image_boxes=tuple(images),
    )


def _walk_content(stream: bytes, blocks: list[TextBlock], images: list[ImageBox]) -> None:
    stack: list[float | str] = []
    # Current transformation matrix (a,b,c,d,e,f) and a q/Q stack.
    ctm = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]
    gs_stack: list[list[float]] = []
    tx, ty = 0.0, 0.0        # text line origin
    leading = 0.0
    in_array: list = []
    collecting = False

    def nums(count: int) -> list[float]:
        vals = [v for v in stack if isinstance(v, float)][-count:]
        return vals if len(vals) == count else []

    def show(text: str) -> None:
        text = text.strip()
        if text:
            blocks.append(TextBlock(x=round(tx, 2), y=round(ty, 2), text=text))

    for kind, value in _tokenize_content(stream):
        if kind == "arr":
            if value == "[":
                collecting, in_array = True, []
            else:
                collecting = False
            continue
        if kind in ("num", "str", "name"):
            if collecting and kind == "str":
                in_array.append(value)
            else:
                stack.append(value)
            continue
        op = value
        if op == "q":
            gs_stack.append(list(ctm))
        elif op == "Q":
            if gs_stack:
                ctm = gs_stack.pop()
        elif op == "cm":
            vals = nums(6)
            if vals:
                a, b, c, d, e, f = vals
                pa, pb, pc, pd, pe, pf = ctm
                ctm = [
                    a * pa + b * pc, a * pb + b * pd,
                    c * pa + d * pc, c * pb + d * pd,
                    e * pa + f * pc + pe, e * pb + f * pd + pf,
                ]
        elif op == "BT":
            tx, ty = 0.0, 0.0
        elif op == "Tm":
            vals = nums(6)
            if vals:
                tx, ty = vals[4], vals[5]
        elif op in ("Td", "TD"):
            vals = nums(2)
            if vals:
                tx += vals[0]
                ty += vals[1]
                if op == "TD":
                    leading = -vals[1]
        elif op == "TL":
            vals = nums(1)
            if vals:
                leading = vals[0]
        elif op == "T*":
            ty -= leading
        elif op in ("Tj", "'", '"'):
            if op in ("'", '"'):
                ty -= leading
            text = next((v for v in reversed(stack) if isinstance(v, str)), None)
            if text is not None:
                show(text)
        elif op == "TJ":
            show("".join(in_array))
            in_array = []
        elif op == "Do":
            a, _b, _c, d, e, f = ctm
            x0, x1 = sorted((e, e + a))
            y0, y1 = sorted((f, f + d))
            if x1 > x0 and y1 > y0:
                images.append(ImageBox(x0=round(x0, 2), y0=round(y0, 2), x1=round(x1, 2), y1=round(y1, 2)))
        if kind == "op":
            stack.clear()
