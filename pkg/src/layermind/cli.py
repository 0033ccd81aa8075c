"""Command-line interface.

Verbs: ingest, build --phase, hitl serve|next|answer, eval run, export
graph|report, fixtures record|verify. Flags override the config file, which
overrides environment variables (PTM_*).
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from layermind.config import load_config
from layermind.errors import LayermindError
from layermind.pipeline import Pipeline

logger = logging.getLogger(__name__)


def _build_config(ctx_obj: dict):
    overrides = {k: v for k, v in ctx_obj.items() if k != "config_path" and v is not None}
    return load_config(ctx_obj.get("config_path"), overrides=overrides)


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file.")
@click.option("--data-dir", default=None, help="Data directory (default ./data or PTM_DATA_DIR).")
@click.option("--mode", default=None, type=click.Choice(["live", "replay", "record"]))
@click.option("--fixture-dir", default=None, help="Replay fixture directory.")
@click.option("--seed", default=None, type=int)
@click.option("-v", "--verbose", is_flag=True, default=False)
@click.pass_context
def main(ctx, config_path, verbose, data_dir, mode, fixture_dir, seed):
    """Layered learner-model pipeline: ingest journals, build, refine, evaluate."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {
        "config_path": config_path,
        "data_dir": data_dir,
        "seed": seed,
        "llm.mode": mode,
        "llm.fixture_dir": fixture_dir,
    }


@main.command()
@click.option("--user", required=True)
@click.argument("journals", type=click.Path(exists=True))
@click.pass_obj
def ingest(obj, user, journals):
    """Ingest a JSONL journal file for USER."""
    pipeline = Pipeline(_build_config(obj))
    _echo_json(pipeline.ingest_journals(user, Path(journals).read_text(encoding="utf-8")))


@main.command()
@click.option("--user", required=True)
@click.option(
    "--phase",
    required=True,
    type=click.Choice(["extract", "phase1", "phase2", "all"]),
    help="'all' runs extract, phase1, phase2 in order.",
)
@click.pass_obj
def build(obj, user, phase):
    """Run construction phases for USER."""
    pipeline = Pipeline(_build_config(obj))
    phases = ["extract", "phase1", "phase2"] if phase == "all" else [phase]
    for p in phases:
        _echo_json(pipeline.run_phase(user, p))


@main.group()
def hitl():
    """Review-session commands."""


@hitl.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--static-dir", default=None, type=click.Path(), help="Built review UI bundle to serve.")
@click.pass_obj
def hitl_serve(obj, host, port, static_dir):
    """Serve the HTTP API (and the review UI when a bundle is given)."""
    from layermind.service import serve as _serve

    _serve(_build_config(obj), host=host, port=port, static_dir=static_dir)


@hitl.command("open")
@click.option("--user", required=True)
@click.pass_obj
def hitl_open(obj, user):
    """Open a review session (the 'hitl' pipeline phase)."""
    _echo_json(Pipeline(_build_config(obj)).run_phase(user, "hitl"))


@hitl.command("next")
@click.option("--user", required=True)
@click.pass_obj
def hitl_next(obj, user):
    """Show the next pending fact-checking question."""
    pipeline = Pipeline(_build_config(obj))
    session = pipeline.load_session(user)
    pending = session.pending()
    if not pending:
        _echo_json({"item": None, "complete": True, "counts": session.counts()})
        return
    item = pending[0]
    _echo_json({"id": item.id, "question": item.question, "layer": item.layer.name, "node_id": item.node_id})


@hitl.command("answer")
@click.option("--user", required=True)
@click.option("--item", "item_id", required=True)
@click.option("--text", default=None, help="Answer text; omit with --skip.")
@click.option("--skip", is_flag=True, default=False)
@click.pass_obj
def hitl_answer(obj, user, item_id, text, skip):
    """Answer or skip one session item."""
    pipeline = Pipeline(_build_config(obj))
    if skip:
        _echo_json(pipeline.skip_session_item(user, item_id))
    elif text:
        _echo_json(pipeline.answer_item(user, item_id, text))
    else:
        raise click.UsageError("provide --text or --skip")


@main.group(name="eval")
def eval_group():
    """Fidelity evaluation."""


@eval_group.command("run")
@click.option("--user", required=True)
@click.option("--condition", required=True, type=click.Choice(["pre", "post"]))
@click.pass_obj
def eval_run(obj, user, condition):
    """Run the evaluation harness for one condition."""
    _echo_json(Pipeline(_build_config(obj)).run_phase(user, f"evaluate_{condition}"))


@main.group()
def export():
    """Export artifacts."""


@export.command("graph")
@click.option("--user", required=True)
@click.option("--version", default=None, type=int)
@click.option("-o", "--output", default=None, type=click.Path())
@click.pass_obj
def export_graph_cmd(obj, user, version, output):
    """Export the graph document for USER (latest or a specific version)."""
    doc = Pipeline(_build_config(obj)).export_graph(user, version)
    payload = json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(payload + "\n", encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(payload)


@export.command("report")
@click.option("--user", required=True)
@click.option("--condition", required=True, type=click.Choice(["pre", "post"]))
@click.option("-o", "--output", default=None, type=click.Path())
@click.pass_obj
def export_report_cmd(obj, user, condition, output):
    """Export the evaluation report for USER."""
    doc = Pipeline(_build_config(obj)).export_report(user, condition)
    payload = json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True)
    if output:
        Path(output).write_text(payload + "\n", encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(payload)


@main.group()
def fixtures():
    """Record and verify deterministic replay fixtures."""


@fixtures.command("record")
@click.option("--user", default="demo")
@click.option("--fixture-dir", required=True, type=click.Path())
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--corpus", default=None, type=click.Path(exists=True), help="JSONL corpus (default: shipped demo).")
def fixtures_record(user, fixture_dir, data_dir, corpus):
    """Run the full pipeline against the live backend, capturing all traffic."""
    from layermind.fixtures import mode_config, record_fixtures, run_complete_pipeline

    if corpus is None:
        reports = record_fixtures(fixture_dir, data_dir, user)
    else:
        payload = Path(corpus).read_text(encoding="utf-8")
        reports = run_complete_pipeline(mode_config("record", fixture_dir, data_dir), user, payload)
    _echo_json({"runs": len(reports), "fixture_dir": str(fixture_dir)})


@fixtures.command("verify")
@click.option("--user", default="demo")
@click.option("--fixture-dir", required=True, type=click.Path(exists=True))
def fixtures_verify(user, fixture_dir):
    """Replay the fixtures twice and diff exports byte for byte."""
    from layermind.fixtures import verify_fixtures

    result = verify_fixtures(fixture_dir, user)
    _echo_json(result)
    if not result["identical"]:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--static-dir", default=None, type=click.Path())
@click.pass_obj
def serve(obj, host, port, static_dir):
    """Serve the HTTP API (alias of `hitl serve`)."""
    from layermind.service import serve as _serve

    _serve(_build_config(obj), host=host, port=port, static_dir=static_dir)


def run() -> None:  # pragma: no cover - console-script shim
    try:
        main(auto_envvar_prefix="PTM")
    except LayermindError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    run()
