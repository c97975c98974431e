from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from lineval.checks.math import RendererUnavailable
from lineval.render import (
    BridgeRenderer,
    FixtureRenderer,
    RendererPool,
    RenderError,
    RenderRequest,
    decode_response,
    encode_request,
)

STUB = [sys.executable, str(Path(__file__).parent / "stub_bridge.py")]


def test_wire_format_request_is_bit_exact():
    line = encode_request(RenderRequest(id="r1", latex="x^2", display_mode=True))
    assert line == '{"id":"r1","latex":"x^2","display":true}'


def test_wire_format_response_decoding():
    line = '{"id":"r1","ok":true,"symbols":[{"g":"x","x0":0,"y0":0,"x1":8,"y1":12}]}'
    response = decode_response(line)
    assert response.id == "r1" and response.ok
    assert response.symbols[0].glyph == "x"
    bad = decode_response('{"id":"r2","ok":false,"error":"parse error"}')
    assert not bad.ok and bad.error == "parse error"


def test_fixture_renderer_round_trip():
    renderer = FixtureRenderer()
    layout = renderer.render_layout("x^2", display=True)
    assert sorted(s.glyph for s in layout.symbols) == ["2", "x"]
    with pytest.raises(RenderError):
        renderer.render_layout("unknown equation", display=True)


def test_fixture_renderer_batch_answers_unknowns_as_failures():
    renderer = FixtureRenderer()
    responses = renderer.render_batch([
        RenderRequest(id="a", latex="x", display_mode=True),
        RenderRequest(id="b", latex="nope", display_mode=True),
    ])
    assert [r.id for r in responses] == ["a", "b"]
    assert responses[0].ok and not responses[1].ok


def test_bridge_round_trip():
    with BridgeRenderer(STUB + ["ok"]) as bridge:
        layout = bridge.render_layout("abc")
        assert [s.glyph for s in layout.symbols] == ["a", "b", "c"]
        assert layout.symbols[0].x1 < layout.symbols[1].x0 + 1e-9


def test_bridge_batch_id_preservation():
    with BridgeRenderer(STUB + ["ok"]) as bridge:
        requests = [RenderRequest(id=f"q{i}", latex="xy") for i in range(50)]
        responses = bridge.render_batch(requests)
        assert [r.id for r in responses] == [f"q{i}" for i in range(50)]
        assert all(r.ok for r in responses)


def test_bridge_restarts_once_after_crash():
    with BridgeRenderer(STUB + ["crash-after-2"]) as bridge:
        assert bridge.render_batch([RenderRequest(id="1", latex="a")])[0].ok
        assert bridge.render_batch([RenderRequest(id="2", latex="b")])[0].ok
        # third request crashes the process; the retry hits a fresh one
        assert bridge.render_batch([RenderRequest(id="3", latex="c")])[0].ok


def test_bridge_gives_up_after_second_crash():
    with BridgeRenderer(STUB + ["crash-after-0"]) as bridge:
        with pytest.raises(RendererUnavailable):
            bridge.render_batch([RenderRequest(id="1", latex="a")])


def test_bridge_error_response_raises_render_error():
    with BridgeRenderer(STUB + ["ok"]) as bridge:
        with pytest.raises(RenderError):
            bridge.render_layout("")


def test_pool_serializes_access():
    pool = RendererPool([FixtureRenderer(), FixtureRenderer()])
    for _ in range(10):
        assert pool.render_layout("x", display=True).symbols
    pool.close()


def test_recordings_file_is_valid_wire_shape():
    import importlib.resources as resources

    data = json.loads(
        resources.files("lineval.data").joinpath("recorded_renders.json").read_text("utf-8")
    )
    assert data
    for entry in data:
        assert set(entry) <= {"latex", "display", "ok", "symbols", "error"}
        if entry["ok"]:
            for s in entry["symbols"]:
                assert set(s) == {"g", "x0", "y0", "x1", "y1"}
                assert s["x0"] < s["x1"] and s["y0"] < s["y1"]
