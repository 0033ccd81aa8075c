"""QA testset generation, model answering, and atomic information point matching.

The fidelity loop: questions with journal-grounded truths are generated over
a date window; the model answers each strictly from its own synthesized node
contents (label selection picks the context); prediction and ground truth are
decomposed into atomic points and classified as TP/FP/FN by the matching
template.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass

from layermind.errors import PreconditionError
from layermind.graph.model import LayerTag, LayeredGraph, PatternNode
from layermind.ingestion import JournalEntry
from layermind.llm import LlmClient, LlmRequest, ask_json

logger = logging.getLogger(__name__)

_HINT_CYCLE = (LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4)


@dataclass(frozen=True)
class QaItem:
    id: str
    query: str
    ground_truth: str
    source_window: tuple[dt.date, dt.date]
    target_layer_hint: LayerTag | None = None

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "query": self.query,
            "ground_truth": self.ground_truth,
            "source_window": [d.isoformat() for d in self.source_window],
            "target_layer_hint": self.target_layer_hint.name if self.target_layer_hint else None,
        }

    @staticmethod
    def from_dict(doc: dict) -> "QaItem":
        hint = doc.get("target_layer_hint")
        return QaItem(
            id=doc["id"],
            query=doc["query"],
            ground_truth=doc["ground_truth"],
            source_window=tuple(dt.date.fromisoformat(d) for d in doc["source_window"]),
            target_layer_hint=LayerTag.parse(hint) if hint else None,
        )


def _validate_qa(payload) -> list[dict]:
    if not isinstance(payload, list):
        raise ValueError("expected a JSON array of query/ground_truth objects")
    for item in payload:
        if not str(item.get("query", "")).strip() or not str(item.get("ground_truth", "")).strip():
            raise ValueError("testset items need non-empty query and ground_truth")
    return payload


def generate_testset(
    entries: list[JournalEntry],
    window: tuple[dt.date, dt.date],
    client: LlmClient,
    target_count: int = 27,
) -> list[QaItem]:
    """Generate QA items over the window's entries.

    Items are capped at ``target_count`` and tagged with a layer hint
    round-robin across L1-L4 to keep the set layer-balanced.
    """
    start, end = window
    in_window = [e for e in entries if start <= e.date <= end]
    if not in_window:
        raise PreconditionError(f"no journal entries in window {start}..{end}")
    journal_text = "\n\n".join(f"[{e.date.isoformat()}] {e.text}" for e in in_window)
    request = LlmRequest("QA", {"journal_entries": journal_text})
    raw_items = ask_json(client, request, validate=_validate_qa)
    items = []
    for i, item in enumerate(raw_items[:target_count]):
        items.append(
            QaItem(
                id=f"qa_{i + 1:03d}",
                query=str(item["query"]).strip(),
                ground_truth=str(item["ground_truth"]).strip(),
                source_window=(start, end),
                target_layer_hint=_HINT_CYCLE[i % len(_HINT_CYCLE)],
            )
        )
    return items


# ----------------------------------------------------------------------
# Label selection and answering
# ----------------------------------------------------------------------


def select_labels(
    query: str,
    labels: list[str],
    num_target: int,
    client: LlmClient,
) -> list[int]:
    """Pick exactly ``num_target`` unique in-range label ids, ranked.

    Out-of-range and duplicate entries are repaired by truncation plus fill
    from the remaining indices in ascending order (logged, not fatal).
    """
    if num_target > len(labels):
        raise PreconditionError(
            f"cannot select {num_target} labels from {len(labels)} candidates"
        )
    label_data = "\n".join(f"{i}: {label}" for i, label in enumerate(labels))
    request = LlmRequest(
        "LS", {"num_target": num_target, "query": query, "label_data": label_data}
    )

    def check(payload):
        if not isinstance(payload, list) or not all(isinstance(v, int) for v in payload):
            raise ValueError("expected a JSON array of integers")
        return payload

    raw = ask_json(client, request, validate=check)
    cleaned: list[int] = []
    for value in raw:
        if 0 <= value < len(labels) and value not in cleaned:
            cleaned.append(value)
    if cleaned != raw:
        logger.info("label selection repaired from %s", raw)
    cleaned = cleaned[:num_target]
    fill = (i for i in range(len(labels)) if i not in cleaned)
    while len(cleaned) < num_target:
        cleaned.append(next(fill))
    return cleaned


REFUSAL_SENTENCE = "I cannot answer this based on the provided context."


def answer_from_ptm(
    query: str,
    graph: LayeredGraph,
    num_target: int,
    client: LlmClient,
) -> str:
    """Answer a query purely from the graph's synthesized node contents.

    Label selection runs over all L1-L4 node titles; the chosen nodes' full
    contents become the answering context. The response is returned verbatim,
    including the refusal sentence when the model emits it.
    """
    if graph.phase_state not in ("full_built", "refined"):
        raise PreconditionError(
            f"answering requires a fully built graph, got {graph.phase_state!r}"
        )
    nodes: list[PatternNode] = []
    for layer in (LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4):
        nodes.extend(graph.layer_nodes(layer))
    picked = select_labels(query, [n.title for n in nodes], min(num_target, len(nodes)), client)
    context = "\n\n".join(f"[{nodes[i].id}] {nodes[i].title}\n{nodes[i].content}" for i in picked)
    request = LlmRequest("CA", {"context": context, "query": query})
    return client.send(request).strip()


# ----------------------------------------------------------------------
# Atomic matching
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AtomicMatchReport:
    item_id: str
    true_positives: tuple[tuple[str, str], ...]
    false_negatives: tuple[tuple[str, str], ...]
    false_positives: tuple[tuple[str, str, str], ...]
    layer: str | None = None
    user_id: str | None = None

    @property
    def tp(self) -> int:
        return len(self.true_positives)

    @property
    def fp(self) -> int:
        return len(self.false_positives)

    @property
    def fn(self) -> int:
        return len(self.false_negatives)

    def as_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "layer": self.layer,
            "true_positives": [list(t) for t in self.true_positives],
            "false_negatives": [list(t) for t in self.false_negatives],
            "false_positives": [list(t) for t in self.false_positives],
        }


def _validate_pe(payload) -> dict:
    if not isinstance(payload, dict):
        raise ValueError("expected a JSON object")
    for key in ("true_positives", "false_negatives", "false_positives"):
        if not isinstance(payload.get(key), list):
            raise ValueError(f"missing list: {key}")
    return payload


def atomic_match(
    query: str,
    prediction: str,
    ground_truth: str,
    client: LlmClient,
    item_id: str = "",
    layer: str | None = None,
    user_id: str | None = None,
) -> AtomicMatchReport:
    """Decompose and classify atomic points via the matching template.

    The inaccurate-match rule (FN for the ground-truth point plus FP for the
    prediction point) arrives already applied in the template output; counts
    here are derived purely from the three returned lists.
    """
    if not prediction.strip() or not ground_truth.strip():
        raise PreconditionError("atomic matching needs non-empty prediction and ground truth")
    request = LlmRequest("PE", {"query": query, "pred": prediction, "gt": ground_truth})
    payload = ask_json(client, request, validate=_validate_pe)
    tps = tuple(
        (str(t.get("gt_atomic_point", "")), str(t.get("p_atomic_point", "")))
        for t in payload["true_positives"]
    )
    fns = tuple(
        (str(t.get("gt_atomic_point", "")), str(t.get("explanation", "")))
        for t in payload["false_negatives"]
    )
    fps = tuple(
        (
            str(t.get("p_atomic_point", "")),
            str(t.get("gt_atomic_point", "")),
            str(t.get("explanation", "")),
        )
        for t in payload["false_positives"]
    )
    return AtomicMatchReport(
        item_id=item_id,
        true_positives=tps,
        false_negatives=fns,
        false_positives=fps,
        layer=layer,
        user_id=user_id,
    )
