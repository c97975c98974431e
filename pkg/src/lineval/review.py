"""Server side of the pairwise review workflow.

A review session serves anonymized output pairs to annotators and appends
their judgments to a JSONL file that the ELO ranker consumes directly.
Tool identities are never part of a served payload: each item shows a
page image plus a "left" and "right" text whose sides are assigned
uniformly at random (seeded), and only the stored judgment records which
tool was which.

The embedded HTTP server exposes ``GET /api/next?annotator=`` and
``POST /api/submit`` plus the static single-page app; appends to the
judgments file are serialized by the single-threaded server.
"""

from __future__ import annotations

import json
import logging
import os
import random
import urllib.parse
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path
from typing import Optional

from lineval.elo import Judgment, dump_judgment, load_judgments

__all__ = [
    "PairRecord",
    "ReviewSession",
    "load_pairs",
    "latest_judgments",
    "make_server",
    "UI_OUTCOMES",
]

log = logging.getLogger(__name__)

# Outcomes as submitted by the UI; left/right are translated to
# a_wins/b_wins using the recorded side assignment.
UI_OUTCOMES = ("left_better", "right_better", "both_good", "both_bad", "invalid", "skipped")


@dataclass(frozen=True)
class PairRecord:
    """One comparison pair: same page, two different tools."""

    pair_id: str
    page_image: str
    tool_a: str
    text_a: str
    tool_b: str
    text_b: str


def load_pairs(path: str | Path) -> list[PairRecord]:
    pairs = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                pairs.append(
                    PairRecord(
                        pair_id=str(obj["pair_id"]),
                        page_image=obj.get("page_image", ""),
                        tool_a=obj["tool_a"],
                        text_a=obj["text_a"],
                        tool_b=obj["tool_b"],
                        text_b=obj["text_b"],
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: pair record missing {exc}") from exc
    return pairs


def latest_judgments(judgments: list[Judgment]) -> list[Judgment]:
    """Collapse superseded duplicates: last (page_id, annotator) wins."""
    latest: dict[tuple[str, str], Judgment] = {}
    for j in judgments:
        latest[(j.page_id, j.annotator)] = j
    return list(latest.values())


class ReviewSession:
    """Queue, side randomization, and append-only judgment storage."""

    def __init__(self, pairs: list[PairRecord], judgments_path: str | Path, seed: int = 0):
        self.pairs = list(pairs)
        self._by_id = {p.pair_id: p for p in self.pairs}
        if len(self._by_id) != len(self.pairs):
            raise ValueError("duplicate pair_id in pairs file")
        self.judgments_path = Path(judgments_path)
        self._rng = random.Random(seed)
        # (annotator, pair_id) -> (left_tool, right_tool)
        self._served: dict[tuple[str, str], tuple[str, str]] = {}
        self._done: set[tuple[str, str]] = set()
        if self.judgments_path.exists():
            for j in load_judgments(self.judgments_path):
                self._done.add((j.annotator, j.page_id))

    def next_item(self, annotator: str) -> Optional[dict]:
        """The next unserved pair for this annotator, or None when done.

        The payload is blind: it never contains tool names.  Each pair is
        served at most once per annotator; annotators have independent
        queues over the same pairs.
        """
        for pair in self.pairs:
            key = (annotator, pair.pair_id)
            if key in self._served or key in self._done:
                continue
            a_left = self._rng.random() < 0.5
            sides = (pair.tool_a, pair.tool_b) if a_left else (pair.tool_b, pair.tool_a)
            self._served[key] = sides
            return {
                "pair_id": pair.pair_id,
                "page_image": pair.page_image,
                "left_text": pair.text_a if a_left else pair.text_b,
                "right_text": pair.text_b if a_left else pair.text_a,
            }
        return None

    def submit(self, pair_id: str, outcome: str, annotator: str) -> Judgment:
        """Record one judgment; appends are flushed and fsynced.

        Duplicate submissions append a superseding line (append-only
        audit; last write wins for consumers using
        :func:`latest_judgments`).
        """
        if outcome not in UI_OUTCOMES:
            raise ValueError(f"unknown outcome {outcome!r}")
        key = (annotator, pair_id)
        sides = self._served.get(key)
        if sides is None:
            raise KeyError(f"pair {pair_id!r} was not served to annotator {annotator!r}")
        pair = self._by_id[pair_id]
        left_tool, _right_tool = sides
        if outcome == "left_better":
            mapped = "a_wins" if left_tool == pair.tool_a else "b_wins"
        elif outcome == "right_better":
            mapped = "b_wins" if left_tool == pair.tool_a else "a_wins"
        else:
            mapped = outcome
        judgment = Judgment(
            page_id=pair.pair_id,
            tool_a=pair.tool_a,
            tool_b=pair.tool_b,
            outcome=mapped,
            annotator=annotator,
        )
        if key in self._done:
            log.info("duplicate submission for %s by %s; appending superseding line", pair_id, annotator)
        with self.judgments_path.open("a", encoding="utf-8") as fh:
            fh.write(dump_judgment(judgment) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._done.add(key)
        return judgment


def make_server(
    session: ReviewSession,
    static_dir: Optional[str | Path] = None,
    images_dir: Optional[str | Path] = None,
    host: str = "127.0.0.1",
    port: int = 8765,
) -> HTTPServer:
    """Build (but do not start) the embedded review server."""
    static_root = Path(static_dir).resolve() if static_dir else None
    images_root = Path(images_dir).resolve() if images_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # route through logging, not stderr
            log.debug("review http: " + fmt, *args)

        def _json(self, status: int, obj: dict) -> None:
            payload = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def _file(self, root: Path, rel: str) -> None:
            target = (root / rel.lstrip("/")).resolve()
            if not str(target).startswith(str(root)) or not target.is_file():
                self.send_error(404)
                return
            ctype = {
                ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
                ".png": "image/png", ".jpg": "image/jpeg", ".svg": "image/svg+xml",
            }.get(target.suffix, "application/octet-stream")
            payload = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_GET(self):
            url = urllib.parse.urlparse(self.path)
            if url.path == "/api/next":
                params = urllib.parse.parse_qs(url.query)
                annotator = params.get("annotator", [""])[0]
                if not annotator:
                    self._json(400, {"error": "annotator query parameter required"})
                    return
                item = session.next_item(annotator)
                self._json(200, item if item is not None else {"done": True})
            elif url.path.startswith("/images/") and images_root is not None:
                self._file(images_root, url.path[len("/images/"):])
            elif static_root is not None:
                rel = "index.html" if url.path == "/" else url.path
                self._file(static_root, rel)
            else:
                self.send_error(404)

        def do_POST(self):
            url = urllib.parse.urlparse(self.path)
            if url.path != "/api/submit":
                self.send_error(404)
                return
            length = int(self.headers.get("Content-Length", 0))
            try:
                obj = json.loads(self.rfile.read(length))
                judgment = session.submit(obj["pair_id"], obj["outcome"], obj["annotator"])
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                self._json(400, {"error": str(exc)})
                return
            self._json(200, {"ok": True, "outcome": judgment.outcome})

    return HTTPServer((host, port), Handler)
