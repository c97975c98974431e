"""Document-anchored prompt building and the converter retry contract.

A page's positioned text blocks and image boxes (bottom-left origin, PDF
units) are serialized into a character-budgeted "anchor text" that rides
along with the page image in the conversion prompt.  Blocks at the start
and end of the page get priority; the rest of the budget is filled by a
seeded random sample, so a retry with a new seed sees different anchors.

``convert_page`` drives a converter callable through the full policy:
structured-response validation, retries with temperature escalation and
re-seeded anchors at decreasing character limits, rotation corrections,
and the final fallback to plain extracted text.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

__all__ = [
    "TextBlock",
    "ImageBox",
    "AnchorLayout",
    "PageResponse",
    "ConverterPolicy",
    "PageTask",
    "ResponseFormatError",
    "ConverterTransportError",
    "ConversionFailed",
    "PROMPT_TEMPLATE",
    "MAX_PROMPT_CHARS",
    "build_anchor",
    "build_prompt",
    "validate_response",
    "serialize_response",
    "convert_page",
    "plain_text_fallback",
]

log = logging.getLogger(__name__)

ROTATIONS = (0, 90, 180, 270)

# Inference prompt carrying the anchor text; the anchor is inserted
# between the RAW_TEXT markers.
PROMPT_TEMPLATE = (
    "Below is the image of one page of a document, as well as some raw textual "
    "content that was previously extracted for it.\n"
    "Just return the plain text representation of this document as if you were "
    "reading it naturally.\n"
    "Do not hallucinate.\n"
    "RAW_TEXT_START\n"
    "{anchor}\n"
    "RAW_TEXT_END"
)

# Whole-prompt bound as a token proxy: 4 characters per token against an
# 8,192-token example cap.  The exact tokenizer is deliberately not part
# of this contract.
MAX_PROMPT_CHARS = 4 * 8192

# Below this anchor budget regeneration gives up and the prompt degrades
# to an empty raw-text section.
_MIN_ANCHOR_LIMIT = 32


@dataclass(frozen=True)
class TextBlock:
    x: float
    y: float
    text: str


@dataclass(frozen=True)
class ImageBox:
    x0: float
    y0: float
    x1: float
    y1: float


@dataclass(frozen=True)
class AnchorLayout:
    """Positioned content of one PDF page, origin at the bottom-left."""

    page_width: float
    page_height: float
    text_blocks: tuple[TextBlock, ...] = ()
    image_boxes: tuple[ImageBox, ...] = ()

    @classmethod
    def from_sidecar(cls, obj: dict) -> "AnchorLayout":
        """Parse the layout sidecar JSON:
        ``{"w":612,"h":792,"blocks":[{"x":..,"y":..,"t":".."}],"images":[[x0,y0,x1,y1]]}``
        """
        blocks = tuple(
            TextBlock(x=float(b["x"]), y=float(b["y"]), text=str(b["t"]))
            for b in obj.get("blocks", [])
            if str(b.get("t", "")).strip()
        )
        images = tuple(ImageBox(*map(float, box)) for box in obj.get("images", []))
        return cls(
            page_width=float(obj["w"]),
            page_height=float(obj["h"]),
            text_blocks=blocks,
            image_boxes=images,
        )

    def to_sidecar(self) -> dict:
        return {
            "w": self.page_width,
            "h": self.page_height,
            "blocks": [{"x": b.x, "y": b.y, "t": b.text} for b in self.text_blocks],
            "images": [[i.x0, i.y0, i.x1, i.y1] for i in self.image_boxes],
        }


def _fmt(value: float) -> str:
    return f"{value:.1f}".rstrip("0").rstrip(".")


def _element_lines(layout: AnchorLayout) -> list[str]:
    lines = [f"[{_fmt(b.x)},{_fmt(b.y)}] {b.text}" for b in layout.text_blocks]
    lines += [
        f"[img {_fmt(i.x0)},{_fmt(i.y0)}→{_fmt(i.x1)},{_fmt(i.y1)}]"
        for i in layout.image_boxes
    ]
    return lines


def build_anchor(layout: AnchorLayout, char_limit: int, rng_seed: int = 0) -> str:
    """Serialize a character-budgeted sample of the page's elements.

    The output starts with a page-dimensions header.  The first and the
    last element get first claim on the budget; remaining elements are
    offered in seeded-random order and added while they fit.  Elements
    appear in document order in the final text, and the total length
    never exceeds ``char_limit``.
    """
    header = f"Page dimensions: {_fmt(layout.page_width)}x{_fmt(layout.page_height)}"
    if char_limit <= len(header):
        raise ValueError(f"char_limit {char_limit} does not even fit the header")
    lines = _element_lines(layout)
    if not lines:
        return header

    budget = char_limit - len(header)
    chosen: set[int] = set()

    def try_add(idx: int) -> None:
        nonlocal budget
        need = len(lines[idx]) + 1  # newline separator
        if idx not in chosen and need <= budget:
            chosen.add(idx)
            budget -= need

    try_add(0)
    if len(lines) > 1:
        try_add(len(lines) - 1)
    middle = list(range(1, len(lines) - 1))
    random.Random(rng_seed).shuffle(middle)
    for idx in middle:
        try_add(idx)

    parts = [header] + [lines[i] for i in sorted(chosen)]
    anchor = "\n".join(parts)
    assert len(anchor) <= char_limit
    return anchor


def build_prompt(
    anchor: str,
    limit_chars: int = 6000,
    regenerate: Optional[Callable[[int], str]] = None,
    max_prompt_chars: int = MAX_PROMPT_CHARS,
) -> str:
    """Embed the anchor in the prompt template, shrinking it if needed.

    While the combined prompt exceeds the token-proxy bound, the anchor
    is regenerated at exponentially lower character limits (halving from
    ``limit_chars``).  ``regenerate`` maps a character limit to a fresh
    anchor; without it the existing anchor is truncated instead.  When
    even the minimum limit cannot fit, the prompt degrades to an empty
    raw-text section and a warning is logged.
    """
    template_overhead = len(PROMPT_TEMPLATE.format(anchor=""))
    limit = limit_chars
    while True:
        prompt = PROMPT_TEMPLATE.format(anchor=anchor)
        if len(prompt) <= max_prompt_chars:
            return prompt
        if limit < _MIN_ANCHOR_LIMIT or template_overhead >= max_prompt_chars:
            log.warning(
                "prompt cannot fit %d chars even with minimal anchor; emitting empty raw text",
                max_prompt_chars,
            )
            return PROMPT_TEMPLATE.format(anchor="")
        anchor = regenerate(limit) if regenerate is not None else anchor[:limit]
        limit //= 2


@dataclass(frozen=True)
class PageResponse:
    """The structured page conversion answer; all six fields required."""

    primary_language: Optional[str]
    is_rotation_valid: bool
    rotation_correction: int
    is_table: bool
    is_diagram: bool
    natural_text: Optional[str]


class ResponseFormatError(ValueError):
    """Response JSON failed strict validation; retryable per policy."""


class ConverterTransportError(RuntimeError):
    """The converter could not be reached or answered abnormally; retryable."""


class ConversionFailed(RuntimeError):
    """All attempts exhausted and the policy forbids a text fallback."""


_RESPONSE_FIELDS = (
    "primary_language",
    "is_rotation_valid",
    "rotation_correction",
    "is_table",
    "is_diagram",
    "natural_text",
)


def validate_response(raw_json: str) -> PageResponse:
    """Strictly parse a converter response against the page schema.

    All six fields are required, unknown fields are rejected, booleans
    must be booleans, and ``rotation_correction`` must be one of
    0/90/180/270.  Violations raise :class:`ResponseFormatError`.
    """
    try:
        obj = json.loads(raw_json)
    except json.JSONDecodeError as exc:
        raise ResponseFormatError(f"response is not valid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ResponseFormatError("response must be a JSON object")
    unknown = sorted(set(obj) - set(_RESPONSE_FIELDS))
    if unknown:
        raise ResponseFormatError(f"unknown fields: {unknown}")
    missing = [f for f in _RESPONSE_FIELDS if f not in obj]
    if missing:
        raise ResponseFormatError(f"missing required fields: {missing}")
    for name in ("primary_language", "natural_text"):
        if obj[name] is not None and not isinstance(obj[name], str):
            raise ResponseFormatError(f"{name} must be a string or null")
    for name in ("is_rotation_valid", "is_table", "is_diagram"):
        if not isinstance(obj[name], bool):
            raise ResponseFormatError(f"{name} must be a boolean")
    rotation = obj["rotation_correction"]
    if isinstance(rotation, bool) or rotation not in ROTATIONS:
        raise ResponseFormatError(f"rotation_correction must be one of {ROTATIONS}, got {rotation!r}")
    return PageResponse(**{f: obj[f] for f in _RESPONSE_FIELDS})


def serialize_response(response: PageResponse) -> str:
    return json.dumps(
        {f: getattr(response, f) for f in _RESPONSE_FIELDS}, ensure_ascii=False
    )


@dataclass(frozen=True)
class ConverterPolicy:
    """Retry/rotation/fallback knobs for a conversion run."""

    max_retries: int = 4
    temperatures: tuple[float, ...] = (0.1, 0.8)
    char_limits: tuple[int, ...] = (6000, 3000, 1500)
    fallback: str = "raw_anchor_text"
    max_rotations: int = 3

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not self.temperatures:
            raise ValueError("temperatures must be non-empty")
        if list(self.char_limits) != sorted(set(self.char_limits), reverse=True):
            raise ValueError("char_limits must be strictly decreasing")
        if self.fallback not in ("raw_anchor_text", "empty"):
            raise ValueError("fallback must be 'raw_anchor_text' or 'empty'")

    def temperature(self, attempt: int) -> float:
        return self.temperatures[min(attempt, len(self.temperatures) - 1)]

    def char_limit(self, attempt: int) -> int:
        return self.char_limits[min(attempt, len(self.char_limits) - 1)]


@dataclass
class PageTask:
    """Everything convert_page needs for one page.

    ``image`` is opaque to the policy; it is handed to the converter and
    transformed by ``rotate`` on rotation corrections.
    """

    image: Any
    layout: AnchorLayout
    name: str = ""
    rotate: Callable[[Any, int], Any] = field(default=lambda image, degrees: image)


def plain_text_fallback(layout: AnchorLayout) -> str:
    """Plain text recovered from the page's own text blocks, document order."""
    return "\n".join(b.text for b in layout.text_blocks)


def convert_page(
    page: PageTask,
    converter: Callable[[Any, str, float], str],
    policy: ConverterPolicy = ConverterPolicy(),
    rng_seed: int = 0,
) -> str:
    """Run the full conversion policy for one page and return its text.

    Each attempt builds a prompt from a freshly seeded anchor (seed and
    character limit advance with the attempt number), calls
    ``converter(image, prompt, temperature)``, and validates the
    response.  Validation and transport failures consume a retry and
    escalate the temperature.  A response reporting an invalid rotation
    triggers a rotated reprocess (same attempt parameters, at most
    ``policy.max_rotations`` times, never undoing the retry budget).
    When attempts run out the policy falls back to plain extracted text,
    or raises :class:`ConversionFailed` when ``fallback='empty'``.
    """
    image = page.image
    rotations_done = 0
    attempt = 0
    while attempt <= policy.max_retries:
        limit = policy.char_limit(attempt)
        anchor = build_anchor(page.layout, limit, rng_seed + attempt)
        prompt = build_prompt(
            anchor, limit, regenerate=lambda lim: build_anchor(page.layout, lim, rng_seed + attempt)
        )
        temperature = policy.temperature(attempt)
        try:
            raw = converter(image, prompt, temperature)
            response = validate_response(raw)
        except (ResponseFormatError, ConverterTransportError) as exc:
            log.info("page %s attempt %d failed: %s", page.name, attempt, exc)
            attempt += 1
            continue
        if not response.is_rotation_valid and response.rotation_correction:
            if rotations_done < policy.max_rotations:
                rotations_done += 1
                log.info(
                    "page %s rotated by %d (rotation %d of %d)",
                    page.name, response.rotation_correction, rotations_done, policy.max_rotations,
                )
                image = page.rotate(image, response.rotation_correction)
                continue
            log.warning("page %s rotation loop guard hit; keeping current orientation", page.name)
        return response.natural_text or ""
    if policy.fallback == "raw_anchor_text":
        log.warning("page %s attempts exhausted; falling back to plain extracted text", page.name)
        return plain_text_fallback(page.layout)
    raise ConversionFailed(f"page {page.name}: attempts exhausted and fallback is 'empty'")
