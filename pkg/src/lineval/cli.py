"""Command-line entry point wiring all modules together.

Exit codes: 0 success, 1 evaluation completed but with load warnings,
2 fatal configuration or usage errors.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import shlex
import sys
from pathlib import Path

import click

from lineval import __version__
from lineval.align import align_score
from lineval.anchor import ConverterPolicy, PageTask, build_anchor, build_prompt, convert_page
from lineval.config import ConfigError, load_config
from lineval.corpus import attach_baseline_tests, load_corpus
from lineval.elo import compute_elo, elo_ci, load_judgments
from lineval.pdftext import layout_for_page, load_layout_sidecar
from lineval.render import BridgeRenderer, FixtureRenderer, RendererPool
from lineval.review import ReviewSession, load_pairs, make_server
from lineval.runner import report_json, report_markdown, run

log = logging.getLogger(__name__)


def _setup_logging(verbose: int) -> None:
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s")


def _make_renderer(bridge_cmd: str | None, pool_size: int):
    if bridge_cmd:
        return RendererPool([BridgeRenderer(shlex.split(bridge_cmd)) for _ in range(pool_size)])
    return FixtureRenderer()


@click.group()
@click.version_option(version=__version__, prog_name="lineval")
@click.option("-v", "--verbose", count=True, help="Increase log verbosity (-v, -vv).")
def main(verbose: int) -> None:
    """Evaluate PDF linearization output with deterministic unit tests."""
    _setup_logging(verbose)


@main.group()
def bench() -> None:
    """Benchmark running and scoring."""


@bench.command(name="run")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--outputs", "outputs_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--jobs", type=int, default=None, help="Worker threads (default 1).")
@click.option("--seed", type=int, default=None, help="Bootstrap seed (default 0).")
@click.option("--json", "json_path", type=click.Path(), default=None, help="Write the JSON report here.")
@click.option("--md", "md_path", type=click.Path(), default=None, help="Write the Markdown report here.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--repeat-threshold", type=int, default=None,
              help="Trailing-repetition span threshold for baseline tests (default 30).")
@click.option("--bridge-cmd", default=None,
              help="Command line of the rendering bridge; recorded fixtures are used when omitted.")
@click.option("--pool-size", type=int, default=2, help="Bridge process pool size.")
@click.option("--no-timestamps", is_flag=True, help="Omit the timestamp for byte-reproducible reports.")
@click.option("--no-baseline", is_flag=True, help="Do not attach implicit baseline tests.")
def bench_run(corpus_dir, outputs_dir, jobs, seed, json_path, md_path, config_path,
              repeat_threshold, bridge_cmd, pool_size, no_timestamps, no_baseline) -> None:
    """Evaluate every test against one or more tools' outputs."""
    try:
        config = load_config(config_path, {
            "corpus": corpus_dir, "outputs": outputs_dir, "jobs": jobs, "seed": seed,
            "repeat_threshold": repeat_threshold,
        })
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    corpus = load_corpus(config.corpus)
    if not no_baseline:
        corpus = attach_baseline_tests(corpus)

    outputs_root = Path(config.outputs)
    tool_dirs = [d for d in sorted(outputs_root.iterdir()) if d.is_dir()]
    if not tool_dirs or any(outputs_root.glob("*.md")) or any(outputs_root.glob("*.txt")):
        tool_dirs = [outputs_root]

    renderer = _make_renderer(bridge_cmd, pool_size)
    try:
        results = [
            run(
                corpus, tool_dir, tool=tool_dir.name, jobs=config.jobs, seed=config.seed,
                renderer=renderer, bootstrap_iterations=config.bootstrap_iterations,
                repeat_threshold=config.repeat_threshold,
            )
            for tool_dir in tool_dirs
        ]
    finally:
        close = getattr(renderer, "close", None)
        if close:
            close()

    timestamp = None if no_timestamps else _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = report_json(results, json_path, timestamp=timestamp, config=_json_safe(config.resolved()))
    if json_path:
        click.echo(f"report: {json_path}")
    else:
        click.echo(text)
    if md_path:
        report_markdown(results, md_path)
        click.echo(f"report: {md_path}")
    else:
        click.echo(report_markdown(results), nl=False)
    all_warnings = [w for r in results for w in r.warnings]
    for warning in all_warnings:
        log.warning("%s", warning)
    sys.exit(1 if all_warnings else 0)


def _json_safe(obj: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in obj.items()}


@bench.command(name="score")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--iterations", type=int, default=10000)
def bench_score(results_path, seed, iterations) -> None:
    """Recompute aggregate scores and CIs from a saved JSON report."""
    from lineval.runner import TestOutcome, aggregate_sources, bootstrap_ci, macro_average

    report = json.loads(Path(results_path).read_text(encoding="utf-8"))
    for entry in report.get("results", []):
        per_test = {
            test_id: TestOutcome(
                passed=o["passed"], explanation=o.get("explanation", ""),
                category=o.get("category", ""), source=o.get("source", ""),
                error=o.get("error", False),
            )
            for test_id, o in entry.get("per_test", {}).items()
        }
        per_source = aggregate_sources(per_test)
        overall = macro_average(per_source)
        lo, hi = bootstrap_ci(per_test, iterations=iterations, seed=seed)
        click.echo(f"{entry['tool']}: overall {100 * overall:.1f} (95% CI {100 * lo:.1f}..{100 * hi:.1f})")


@main.command()
@click.option("--a", "dir_a", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--b", "dir_b", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--denominator", type=click.Choice(["max", "min", "mean"]), default="max")
def align(dir_a, dir_b, csv_path, denominator) -> None:
    """Word-alignment scores between two directories of page texts."""
    from lineval.normalize import normalize

    dir_a, dir_b = Path(dir_a), Path(dir_b)
    names = sorted(
        {p.name for p in dir_a.iterdir() if p.suffix in (".md", ".txt")}
        & {p.name for p in dir_b.iterdir() if p.suffix in (".md", ".txt")}
    )
    if not names:
        raise click.UsageError("no common page files between the two directories")
    rows = []
    buckets = {"low": 0, "medium": 0, "high": 0}
    for name in names:
        text_a = normalize((dir_a / name).read_text(encoding="utf-8", errors="replace"))
        text_b = normalize((dir_b / name).read_text(encoding="utf-8", errors="replace"))
        score = align_score(text_a, text_b, denominator=denominator)
        buckets[score.bucket] += 1
        rows.append((name, score.matched, score.len_a, score.len_b, f"{score.score:.4f}", score.bucket))
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["page", "matched", "len_a", "len_b", "score", "bucket"])
            writer.writerows(rows)
        click.echo(f"report: {csv_path}")
    mean = sum(float(r[4]) for r in rows) / len(rows)
    click.echo(f"pages: {len(rows)}  mean score: {mean:.3f}")
    click.echo(f"buckets: low {buckets['low']}  medium {buckets['medium']}  high {buckets['high']}")


@main.command()
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k_factor", type=float, default=32.0)
@click.option("--shuffles", type=int, default=100)
@click.option("--resamples", type=int, default=5000)
@click.option("--seed", type=int, default=0)
@click.option("--json", "json_path", type=click.Path(), default=None)
def elo(judgments_path, k_factor, shuffles, resamples, seed, json_path) -> None:
    """ELO ratings with win/loss tables from pairwise judgments."""
    judgments = load_judgments(judgments_path)
    result = compute_elo(judgments, k_factor=k_factor, shuffles=shuffles, seed=seed)
    decisive = sum(stats["games"] for stats in result.games.values())
    if decisive >= 2:
        result.ci95 = elo_ci(
            judgments, resamples=resamples, seed=seed, k_factor=k_factor, shuffles=shuffles
        )
    for tool, rating in sorted(result.ratings.items(), key=lambda kv: -kv[1]):
        ci = result.ci95.get(tool)
        suffix = f"  (95% CI {ci[0]:.0f}..{ci[1]:.0f})" if ci else ""
        click.echo(f"{tool}: {rating:.1f}{suffix}")
    for (tool_a, tool_b), stats in sorted(result.games.items()):
        click.echo(
            f"{tool_a} vs {tool_b}: {stats['wins_a']}/{stats['wins_b']}"
            f"  win rate {100 * stats['win_rate_a']:.1f}%"
        )
    if json_path:
        obj = {
            "ratings": result.ratings,
            "ci95": {t: list(v) for t, v in result.ci95.items()},
            "games": {f"{a} vs {b}": stats for (a, b), stats in sorted(result.games.items())},
        }
        Path(json_path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(f"report: {json_path}")


@main.group()
def anchor() -> None:
    """Anchor text utilities."""


@anchor.command(name="build")
@click.option("--pdf", "pdf_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--page", type=int, required=True)
@click.option("--limit", type=int, default=6000)
@click.option("--seed", type=int, default=0)
@click.option("--layout", "layout_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Layout sidecar JSON (default: <pdf>.layout.json, else the built-in extractor).")
@click.option("--prompt", "as_prompt", is_flag=True, help="Emit the full prompt instead of the bare anchor.")
def anchor_build(pdf_path, page, limit, seed, layout_path, as_prompt) -> None:
    """Build the anchor text for one PDF page."""
    if layout_path:
        layout = load_layout_sidecar(layout_path)
    else:
        layout = layout_for_page(pdf_path, page)
    text = build_anchor(layout, limit, seed)
    if as_prompt:
        text = build_prompt(text, limit, regenerate=lambda lim: build_anchor(layout, lim, seed))
    click.echo(text)


@main.command()
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--endpoint", required=True)
@click.option("--model", default="default")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="converted")
@click.option("--fallback", type=click.Choice(["raw", "empty"]), default="raw")
@click.option("--max-retries", type=int, default=4)
@click.option("--seed", type=int, default=0)
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory of <pdf-stem>_pg<page>.png page rasters.")
def convert(corpus_dir, endpoint, model, out_dir, fallback, max_retries, seed, images_dir) -> None:
    """Convert every corpus page through an OpenAI-compatible endpoint."""
    from lineval.convert_http import OpenAIChatConverter

    corpus = load_corpus(corpus_dir)
    converter = OpenAIChatConverter(endpoint, model)
    policy = ConverterPolicy(
        max_retries=max_retries,
        fallback="raw_anchor_text" if fallback == "raw" else "empty",
    )
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    failures = 0
    for pdf, page in sorted(corpus.pages()):
        pdf_path = corpus.pdf_root / pdf
        stem = Path(pdf).stem
        image: bytes | Path = b""
        if images_dir:
            candidate = Path(images_dir) / f"{stem}_pg{page}.png"
            if candidate.exists():
                image = candidate
        try:
            layout = layout_for_page(pdf_path, page)
            text = convert_page(
                PageTask(image=image, layout=layout, name=f"{pdf}:{page}"),
                converter, policy, rng_seed=seed,
            )
        except Exception as exc:
            log.warning("page %s:%d failed: %s", pdf, page, exc)
            failures += 1
            continue
        (out_root / f"{stem}_pg{page}.md").write_text(text, encoding="utf-8")
    click.echo(f"converted {len(corpus.pages()) - failures}/{len(corpus.pages())} pages into {out_root}")
    sys.exit(1 if failures else 0)


@main.group()
def review() -> None:
    """Pairwise human review."""


@review.command(name="serve")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--judgments", "judgments_path", required=True, type=click.Path())
@click.option("--static", "static_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Directory with the built review web app (index.html + assets).")
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8765)
@click.option("--seed", type=int, default=0)
def review_serve(pairs_path, judgments_path, static_dir, images_dir, host, port, seed) -> None:
    """Serve the side-by-side review app and collect judgments."""
    session = ReviewSession(load_pairs(pairs_path), judgments_path, seed=seed)
    server = make_server(session, static_dir=static_dir, images_dir=images_dir, host=host, port=port)
    click.echo(f"review server on http://{host}:{port}/  (judgments -> {judgments_path})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down")
    finally:
        server.server_close()


if __name__ == "__main__":
    main()
