"""Phase 3: human-in-the-loop refinement.

A session selects nodes across L1-L4 (proportional to layer size, remainders
biased to lower layers), asks one fact-checking question per node, and feeds
each answer through the refinement template. Refinement only ever rewrites a
node's content and appends to its revision log; structure is untouched.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field

from layermind.errors import NotFoundError, PreconditionError
from layermind.graph.model import LayerTag, LayeredGraph, PatternNode
from layermind.llm import LlmClient, LlmRequest, ask_json
from layermind.textutil import sentences

logger = logging.getLogger(__name__)

SESSION_LAYERS = (LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4)

# Clause splitter for the T-unit heuristic: a comma followed by a
# coordinating conjunction is read as joining two independent clauses.
_CLAUSE_SPLIT = re.compile(r"[;]\s*|,\s+(?:and|but|or|nor|so|yet|for)\s+", re.IGNORECASE)


@dataclass
class FactCheckItem:
    id: str
    node_id: str
    question: str
    layer: LayerTag
    status: str = "pending"  # pending | answered | skipped


@dataclass(frozen=True)
class FeedbackRecord:
    item_id: str
    answer: str
    word_count: int
    t_unit_count: int
    submitted_at: str


@dataclass
class HitlSession:
    user_id: str
    session_id: str
    items: list[FactCheckItem]
    graph_version_pre: int
    graph_version_post: int | None = None
    seed: int = 0
    feedback: list[FeedbackRecord] = field(default_factory=list)

    def pending(self) -> list[FactCheckItem]:
        return [i for i in self.items if i.status == "pending"]

    def complete(self) -> bool:
        return not self.pending()

    def counts(self) -> dict[str, int]:
        out = {"total": len(self.items), "answered": 0, "skipped": 0, "pending": 0}
        for item in self.items:
            out[item.status] += 1
        return out


def word_count(text: str) -> int:
    """Whitespace token count."""
    return len(text.split())


def count_t_units(text: str) -> int:
    """Approximate count of minimal terminable units.

    Heuristic: split on terminal punctuation into sentences, then split each
    sentence on semicolons and on a comma followed by a coordinating
    conjunction (and/but/or/nor/so/yet/for). Every non-empty piece counts as
    one unit, so any non-empty text counts at least 1. The heuristic is
    frozen: downstream correlations are only comparable if it never drifts.
    """
    total = 0
    for sent in sentences(text):
        parts = [p for p in _CLAUSE_SPLIT.split(sent) if p.strip()]
        total += max(1, len(parts)) if sent.strip() else 0
    return total


def allocate_counts(layer_sizes: dict[LayerTag, int], n_items: int) -> dict[LayerTag, int]:
    """Proportional apportionment with remainders handed to lower layers first."""
    sizes = {layer: layer_sizes.get(layer, 0) for layer in SESSION_LAYERS}
    total = sum(sizes.values())
    if total == 0:
        raise PreconditionError("graph has no L1-L4 nodes to review")
    n_items = min(n_items, total)
    quota = {layer: (n_items * size) // total for layer, size in sizes.items()}
    remaining = n_items - sum(quota.values())
    while remaining > 0:
        progressed = False
        for layer in SESSION_LAYERS:
            if remaining == 0:
                break
            if quota[layer] < sizes[layer]:
                quota[layer] += 1
                remaining -= 1
                progressed = True
        if not progressed:
            break
    return quota


def generate_question(node: PatternNode, client: LlmClient) -> str:
    """One fact-checking question scoped to a single node's content.

    The testset-generation template is reused at node scope; the first
    generated query becomes the question. Empty generations fall back to a
    deterministic template naming the node title.
    """
    request = LlmRequest("QA", {"journal_entries": f"[{node.id}] {node.title}. {node.content}"})

    def check(payload):
        if not isinstance(payload, list):
            raise ValueError("expected a JSON array of question objects")
        return payload

    items = ask_json(client, request, validate=check)
    for item in items:
        query = str(item.get("query", "") or "").strip()
        if query:
            return query
    logger.warning("question generation empty for node %s; using fallback", node.id)
    return f"Is it true that {node.title}? Please explain."


def open_session(
    graph: LayeredGraph,
    client: LlmClient,
    n_items: int = 18,
    seed: int = 0,
) -> HitlSession:
    """Select layer-stratified nodes, question each, and shuffle the queue."""
    if graph.phase_state not in ("full_built", "refined"):
        raise PreconditionError(
            f"a review session requires a fully built graph, got {graph.phase_state!r}"
        )
    sizes = {layer: len(graph.layer_nodes(layer)) for layer in SESSION_LAYERS}
    total = sum(sizes.values())
    if total < n_items:
        logger.warning("only %d nodes available for a %d-item session", total, n_items)
    quota = allocate_counts(sizes, n_items)
    rng = random.Random(seed)
    chosen: list[PatternNode] = []
    for layer in SESSION_LAYERS:
        ids = [n.id for n in graph.layer_nodes(layer)]
        for node_id in rng.sample(ids, quota[layer]):
            chosen.append(graph.node(node_id))
    items = [
        FactCheckItem(
            id=f"item_{i:02d}",
            node_id=node.id,
            question=generate_question(node, client),
            layer=node.layer,
        )
        for i, node in enumerate(chosen, start=1)
    ]
    rng.shuffle(items)
    return HitlSession(
        user_id=graph.user_id,
        session_id=f"hitl-v{graph.snapshot_version}-s{seed}",
        items=items,
        graph_version_pre=graph.snapshot_version,
        seed=seed,
    )


def _validate_nr(payload) -> str:
    if not isinstance(payload, dict) or not str(payload.get("updated_content", "")).strip():
        raise ValueError("expected an object with non-empty updated_content")
    return str(payload["updated_content"]).strip()


def apply_feedback(
    graph: LayeredGraph,
    session: HitlSession,
    item_id: str,
    answer: str,
    client: LlmClient,
    submitted_at: str,
    phase_state: str | None = None,
) -> tuple[LayeredGraph, FeedbackRecord]:
    """Refine one node from an answer; returns the new snapshot and the record.

    Counts are recomputed from the answer text here, never trusted from the
    caller. Very short answers are still processed. Only the node's content
    and revision log change (plus, on the session's closing answer, the
    graph's phase state).
    """
    item = _find_item(session, item_id)
    if item.status != "pending":
        raise PreconditionError(f"item {item_id!r} is already {item.status}")
    if not answer.strip():
        raise PreconditionError("feedback answer must be non-empty")
    node = graph.node(item.node_id)
    request = LlmRequest(
        "NR",
        {"existing_node_content": node.content, "new_instances_text": answer.strip()},
    )
    updated_content = ask_json(client, request, validate=_validate_nr)
    feedback_id = f"fb-{item.id}"
    new_graph = graph.revise_node(
        item.node_id, updated_content, feedback_id, submitted_at, phase_state=phase_state
    )
    record = FeedbackRecord(
        item_id=item.id,
        answer=answer.strip(),
        word_count=word_count(answer),
        t_unit_count=count_t_units(answer),
        submitted_at=submitted_at,
    )
    item.status = "answered"
    session.feedback.append(record)
    return new_graph, record


def skip_item(session: HitlSession, item_id: str) -> None:
    item = _find_item(session, item_id)
    if item.status != "pending":
        raise PreconditionError(f"item {item_id!r} is already {item.status}")
    item.status = "skipped"


def _find_item(session: HitlSession, item_id: str) -> FactCheckItem:
    for item in session.items:
        if item.id == item_id:
            return item
    raise NotFoundError(f"unknown session item: {item_id!r}")


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------


def session_to_doc(session: HitlSession) -> dict:
    return {
        "user_id": session.user_id,
        "session_id": session.session_id,
        "graph_version_pre": session.graph_version_pre,
        "graph_version_post": session.graph_version_post,
        "seed": session.seed,
        "items": [
            {
                "id": i.id,
                "node_id": i.node_id,
                "question": i.question,
                "layer": i.layer.name,
                "status": i.status,
            }
            for i in session.items
        ],
        "feedback": [
            {
                "item_id": f.item_id,
                "answer": f.answer,
                "word_count": f.word_count,
                "t_unit_count": f.t_unit_count,
                "submitted_at": f.submitted_at,
            }
            for f in session.feedback
        ],
    }


def session_from_doc(doc: dict) -> HitlSession:
    return HitlSession(
        user_id=doc["user_id"],
        session_id=doc["session_id"],
        graph_version_pre=doc["graph_version_pre"],
        graph_version_post=doc.get("graph_version_post"),
        seed=doc.get("seed", 0),
        items=[
            FactCheckItem(
                id=i["id"],
                node_id=i["node_id"],
                question=i["question"],
                layer=LayerTag.parse(i["layer"]),
                status=i["status"],
            )
            for i in doc["items"]
        ],
        feedback=[
            FeedbackRecord(
                item_id=f["item_id"],
                answer=f["answer"],
                word_count=f["word_count"],
                t_unit_count=f["t_unit_count"],
                submitted_at=f["submitted_at"],
            )
            for f in doc.get("feedback", [])
        ],
    )


def session_report(session: HitlSession) -> dict:
    counts = session.counts()
    answered = [f for f in session.feedback]
    return {
        "session_id": session.session_id,
        "user_id": session.user_id,
        "items": session_to_doc(session)["items"],
        "counts": counts,
        "feedback_stats": {
            "n": len(answered),
            "total_words": sum(f.word_count for f in answered),
            "mean_words": (sum(f.word_count for f in answered) / len(answered)) if answered else 0.0,
            "total_t_units": sum(f.t_unit_count for f in answered),
        },
        "version_pre": session.graph_version_pre,
        "version_post": session.graph_version_post,
    }
