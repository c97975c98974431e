"""Stand-in bridge process for protocol tests.

Speaks the line-JSON render protocol: each request gets one response with
a single unit box per input character.  Modes (argv[1]):

    ok            answer every request
    crash-after-N answer N requests, then exit abruptly
    garbage       answer with a non-JSON line
"""

import json
import sys


def main() -> None:
    mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
    crash_after = None
    if mode.startswith("crash-after-"):
        crash_after = int(mode.rsplit("-", 1)[1])
    answered = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        if crash_after is not None and answered >= crash_after:
            sys.exit(1)
        if mode == "garbage":
            print("not json at all", flush=True)
            continue
        req = json.loads(line)
        symbols = [
            {"g": ch, "x0": float(10 * i), "y0": 0.0, "x1": float(10 * i + 8), "y1": 12.0}
            for i, ch in enumerate(req["latex"])
        ]
        if not symbols:
            print(json.dumps({"id": req["id"], "ok": False, "error": "empty input"}), flush=True)
        else:
            print(json.dumps({"id": req["id"], "ok": True, "symbols": symbols}), flush=True)
        answered += 1


if __name__ == "__main__":
    main()
