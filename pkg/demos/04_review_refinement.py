"""Walkthrough: the question-driven refinement loop, end to end on disk.

Runs the pipeline through a complete review session in a temp directory,
using the same Pipeline object the HTTP service wraps, then shows what a
refinement actually did to a node: content rewritten, prior content kept in
the revision log, structure untouched.
"""

import tempfile
from pathlib import Path

from layermind.fixtures import FULL_PHASES, shipped_corpus_path, synthetic_answer
from layermind.config import PipelineConfig
from layermind.pipeline import Pipeline

workdir = Path(tempfile.mkdtemp(prefix="review-demo-"))
config = PipelineConfig()
config.llm.mode = "live"  # scripted backend; deterministic, no network
config.data_dir = str(workdir)
pipeline = Pipeline(config)

pipeline.ingest_journals("demo", shipped_corpus_path().read_text(encoding="utf-8"))
for phase in FULL_PHASES:
    report = pipeline.run_phase("demo", phase)
    print(f"{phase:>13}: {report.get('instances') or report.get('l1_nodes') or report.get('items') or report.get('layer_counts') or report.get('overall', {}).get('f1')}")

session = pipeline.load_session("demo")
print(f"\nsession {session.session_id}: {len(session.items)} questions, "
      f"graph frozen at v{session.graph_version_pre}")
for item in session.items[:3]:
    print(f"  [{item.layer.name}] {item.question[:88]}")

# Answer the first question, skip the second; watch the node change.
first = session.items[0]
answer = synthetic_answer(first.question, first.node_id, 0)
result = pipeline.answer_item("demo", first.id, answer)
print(f"\nanswered {first.id} ({result['word_count']} words, "
      f"{result['t_unit_count']} T-units)")
print("  before:", result["content_before"][:80])
print("  after: ", result["content_after"][:80], "...")

skipped = pipeline.load_session("demo").pending()[0]
pipeline.skip_session_item("demo", skipped.id)
counts = pipeline.load_session("demo").counts()
print(f"\nskipped {skipped.id}; session now {counts}")

graph = pipeline.store.load("demo")
node = graph.node(first.node_id)
print(f"\nrevision log of {node.id}: {len(node.revisions)} entry")
print("  prior content preserved:", node.revisions[-1].prior_content[:60], "...")
print("  structure untouched: sources", list(node.source_ids))
