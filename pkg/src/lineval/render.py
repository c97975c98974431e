"""Client side of the equation rendering bridge.

The bridge is a child process speaking line-delimited JSON over
stdin/stdout, one object per line, UTF-8, no pretty-printing:

    request:  {"id":"r1","latex":"x^2","display":true}
    response: {"id":"r1","ok":true,"symbols":[{"g":"x","x0":0.0,"y0":0.0,"x1":8.0,"y1":12.0}, ...]}
    failure:  {"id":"r1","ok":false,"error":"parse error ..."}

:class:`BridgeRenderer` supervises one such process (restarting it once
on a crash); :class:`RendererPool` fans requests out over several.
:class:`FixtureRenderer` replays recorded responses from a JSON file so
everything downstream of rendering is testable without the bridge.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from lineval.checks.math import RendererUnavailable, SymbolBox, SymbolLayout

__all__ = [
    "RenderRequest",
    "RenderResponse",
    "RenderError",
    "BridgeRenderer",
    "FixtureRenderer",
    "RendererPool",
    "encode_request",
    "decode_response",
]


class RenderError(RuntimeError):
    """The bridge answered, but could not render this particular input."""


@dataclass(frozen=True)
class RenderRequest:
    id: str
    latex: str
    display_mode: bool = False


@dataclass(frozen=True)
class RenderResponse:
    id: str
    ok: bool
    symbols: tuple[SymbolBox, ...] = ()
    error: Optional[str] = None

    def layout(self, source: str = "") -> SymbolLayout:
        if not self.ok:
            raise RenderError(self.error or "render failed")
        return SymbolLayout(symbols=self.symbols, source=source)


def encode_request(request: RenderRequest) -> str:
    return json.dumps(
        {"id": request.id, "latex": request.latex, "display": request.display_mode},
        ensure_ascii=False,
        separators=(",", ":"),
    )


def decode_response(line: str) -> RenderResponse:
    obj = json.loads(line)
    symbols = tuple(
        SymbolBox(glyph=s["g"], x0=s["x0"], y0=s["y0"], x1=s["x1"], y1=s["y1"])
        for s in obj.get("symbols") or []
    )
    return RenderResponse(
        id=obj["id"], ok=bool(obj["ok"]), symbols=symbols, error=obj.get("error")
    )


class BridgeRenderer:
    """Talks to one bridge process, serially, restarting it once per batch
    if it crashes mid-flight."""

    def __init__(self, command: Sequence[str]):
        self._command = list(command)
        self._proc: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()
        self._counter = 0

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        return self._proc

    def close(self) -> None:
        with self._lock:
            if self._proc is not None and self._proc.poll() is None:
                try:
                    self._proc.stdin.close()
                    self._proc.wait(timeout=5)
                except Exception:
                    self._proc.kill()
            self._proc = None

    def __enter__(self) -> "BridgeRenderer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _round_trip(self, requests: Sequence[RenderRequest]) -> list[RenderResponse]:
        proc = self._ensure_process()
        responses = []
        for request in requests:
            proc.stdin.write(encode_request(request) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
            if not line:
                raise BrokenPipeError("bridge process closed its output")
            responses.append(decode_response(line))
        return responses

    def render_batch(self, requests: Sequence[RenderRequest]) -> list[RenderResponse]:
        """One response per request, matched and ordered by id.

        A crashed bridge is restarted and the batch retried once; a
        second crash raises :class:`RendererUnavailable`.
        """
        with self._lock:
            for attempt in (1, 2):
                try:
                    responses = self._round_trip(requests)
                    break
                except (BrokenPipeError, OSError, json.JSONDecodeError) as exc:
                    self._proc = None
                    if attempt == 2:
                        raise RendererUnavailable(f"bridge process failed twice: {exc}") from exc
            by_id = {r.id: r for r in responses}
            missing = [r.id for r in requests if r.id not in by_id]
            if missing:
                raise RendererUnavailable(f"bridge dropped responses for ids {missing}")
            return [by_id[r.id] for r in requests]

    def render_layout(self, latex: str, display: bool = False) -> SymbolLayout:
        with self._lock:
            self._counter += 1
            rid = f"q{self._counter}"
        response = self.render_batch([RenderRequest(id=rid, latex=latex, display_mode=display)])[0]
        return response.layout(source=latex)


class FixtureRenderer:
    """Replays recorded renders from a JSON file.

    The file is a list of ``{"latex", "display", "ok", "symbols"|"error"}``
    entries; see ``lineval/data/recorded_renders.json`` for the set used
    by the test suite and demos.  Unrecorded input raises
    :class:`RenderError` (the same contract as an unrenderable equation).
    """

    def __init__(self, path: Optional[str | Path] = None):
        if path is None:
            text = resources.files("lineval.data").joinpath("recorded_renders.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        self._recordings: dict[tuple[str, bool], RenderResponse] = {}
        for entry in json.loads(text):
            symbols = tuple(
                SymbolBox(glyph=s["g"], x0=s["x0"], y0=s["y0"], x1=s["x1"], y1=s["y1"])
                for s in entry.get("symbols") or []
            )
            response = RenderResponse(
                id="", ok=bool(entry["ok"]), symbols=symbols, error=entry.get("error")
            )
            self._recordings[(entry["latex"].strip(), bool(entry["display"]))] = response

    def lookup(self, latex: str, display: bool) -> Optional[RenderResponse]:
        return self._recordings.get((latex.strip(), display))

    def render_batch(self, requests: Sequence[RenderRequest]) -> list[RenderResponse]:
        out = []
        for request in requests:
            hit = self.lookup(request.latex, request.display_mode)
            if hit is None:
                out.append(
                    RenderResponse(id=request.id, ok=False, error="not in recorded fixtures")
                )
            else:
                out.append(RenderResponse(id=request.id, ok=hit.ok, symbols=hit.symbols, error=hit.error))
        return out

    def render_layout(self, latex: str, display: bool = False) -> SymbolLayout:
        hit = self.lookup(latex, display)
        if hit is None:
            raise RenderError(f"no recorded render for {latex!r} (display={display})")
        return hit.layout(source=latex)


class RendererPool:
    """Bounded pool of renderer clients; access to each is serialized."""

    def __init__(self, renderers: Sequence):
        if not renderers:
            raise ValueError("pool needs at least one renderer")
        self._pool: queue.Queue = queue.Queue()
        self._all = list(renderers)
        for renderer in renderers:
            self._pool.put(renderer)

    def render_layout(self, latex: str, display: bool = False) -> SymbolLayout:
        renderer = self._pool.get()
        try:
            return renderer.render_layout(latex, display)
        finally:
            self._pool.put(renderer)

    def close(self) -> None:
        for renderer in self._all:
            close = getattr(renderer, "close", None)
            if close is not None:
                close()
