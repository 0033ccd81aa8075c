"""Versioned, file-backed persistence for layered graphs.

Each user owns a directory of snapshot documents, one JSON file per version.
Snapshots are append-only: a write always lands in a new file via
write-temp-then-rename, so prior versions stay readable and auditable
(pre- vs post-refinement comparisons depend on that).
"""

from __future__ import annotations

import datetime as dt
import json
import os
import re
import tempfile
import threading
from pathlib import Path

from layermind.errors import GraphError, NotFoundError
from layermind.graph.model import (
    AnalyticalDimension,
    BehavioralInstance,
    LayerTag,
    LayeredGraph,
    Node,
    PatternNode,
    Revision,
)

_SNAPSHOT_RE = re.compile(r"^v(\d{5})\.json$")


def atomic_write_json(path: Path, payload: dict) -> None:
    """Serialize to a temp file in the target directory, then rename into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ----------------------------------------------------------------------
# Node (de)serialization
# ----------------------------------------------------------------------


def node_to_doc(node: Node) -> dict:
    if isinstance(node, BehavioralInstance):
        window = None
        if node.time_window is not None:
            window = [t.strftime("%H:%M") for t in node.time_window]
        return {
            "id": node.id,
            "layer": "L0",
            "what": node.what,
            "when": node.when,
            "where": node.where,
            "who": node.who,
            "why": node.why,
            "how": node.how,
            "date": node.date.isoformat(),
            "time_window": window,
            "journal_entry_id": node.journal_entry_id,
        }
    doc = {
        "id": node.id,
        "layer": node.layer.name,
        "title": node.title,
        "content": node.content,
        "source_ids": list(node.source_ids),
        "revisions": [
            {"timestamp": r.timestamp, "prior_content": r.prior_content, "feedback_id": r.feedback_id}
            for r in node.revisions
        ],
    }
    if node.dimension_id is not None:
        doc["dimension_id"] = node.dimension_id
    return doc


def node_from_doc(doc: dict) -> Node:
    layer = LayerTag.parse(doc["layer"])
    if layer == LayerTag.L0:
        window = None
        if doc.get("time_window"):
            h1, m1 = map(int, doc["time_window"][0].split(":"))
            h2, m2 = map(int, doc["time_window"][1].split(":"))
            window = (dt.time(h1, m1), dt.time(h2, m2))
        return BehavioralInstance(
            id=doc["id"],
            what=doc["what"],
            when=doc["when"],
            where=doc["where"],
            who=doc["who"],
            why=doc["why"],
            how=doc["how"],
            date=dt.date.fromisoformat(doc["date"]),
            time_window=window,
            journal_entry_id=doc["journal_entry_id"],
        )
    return PatternNode(
        id=doc["id"],
        layer=layer,
        title=doc["title"],
        content=doc["content"],
        source_ids=tuple(doc["source_ids"]),
        dimension_id=doc.get("dimension_id"),
        revisions=tuple(
            Revision(r["timestamp"], r["prior_content"], r["feedback_id"])
            for r in doc.get("revisions", [])
        ),
    )


def graph_to_document(graph: LayeredGraph, created_at: str) -> dict:
    return {
        "user_id": graph.user_id,
        "version": graph.snapshot_version,
        "phase_state": graph.phase_state,
        "created_at": created_at,
        "nodes": [node_to_doc(graph.nodes[k]) for k in sorted(graph.nodes)],
        "dimensions": [
            {
                "id": d.id,
                "layer": d.layer.name,
                "title": d.title,
                "description": d.description,
            }
            for _, d in sorted(graph.dimensions.items())
        ],
    }


def graph_from_document(doc: dict) -> LayeredGraph:
    nodes = {n["id"]: node_from_doc(n) for n in doc["nodes"]}
    dims = {
        d["id"]: AnalyticalDimension(
            id=d["id"],
            layer=LayerTag.parse(d["layer"]),
            title=d["title"],
            description=d["description"],
        )
        for d in doc.get("dimensions", [])
    }
    return LayeredGraph(
        user_id=doc["user_id"],
        nodes=nodes,
        dimensions=dims,
        snapshot_version=doc["version"],
        phase_state=doc["phase_state"],
    )


def export_document(graph: LayeredGraph, generated_at: str) -> dict:
    """External graph export: one JSON document per user.

    Pattern nodes expose ``title``/``content`` and ``source_instances`` (L1) or
    ``source_nodes`` (L2-L4), matching the synthesis prompt schemas.
    """
    nodes = []
    for key in sorted(graph.nodes, key=lambda k: (int(graph.nodes[k].layer), k)):
        node = graph.nodes[key]
        if isinstance(node, BehavioralInstance):
            nodes.append(
                {
                    "id": node.id,
                    "layer": "L0",
                    "what": node.what,
                    "when": node.when,
                    "where": node.where,
                    "who": node.who,
                    "why": node.why,
                    "how": node.how,
                    "date": node.date.isoformat(),
                    "journal_entry_id": node.journal_entry_id,
                }
            )
            continue
        doc = {
            "id": node.id,
            "layer": node.layer.name,
            "title": node.title,
            "content": node.content,
            "revision_count": len(node.revisions),
        }
        if node.layer == LayerTag.L1:
            doc["source_instances"] = list(node.source_ids)
        else:
            doc["source_nodes"] = list(node.source_ids)
            doc["dimension_id"] = node.dimension_id
            dim = graph.dimensions.get(node.dimension_id)
            if dim is not None:
                doc["dimension_title"] = dim.title
        nodes.append(doc)
    return {
        "user_id": graph.user_id,
        "version": graph.snapshot_version,
        "generated_at": generated_at,
        "nodes": nodes,
    }


# ----------------------------------------------------------------------
# Store
# ----------------------------------------------------------------------


class GraphStore:
    """Per-user snapshot directory with a single-writer lock per user.

    Reads of any persisted version are lock-free; snapshot files are never
    rewritten once placed.
    """

    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def user_dir(self, user_id: str) -> Path:
        return self.data_dir / "users" / user_id

    def _snapshot_dir(self, user_id: str) -> Path:
        return self.user_dir(user_id) / "snapshots"

    def writer_lock(self, user_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(user_id, threading.Lock())

    def exists(self, user_id: str) -> bool:
        return bool(self.versions(user_id))

    def versions(self, user_id: str) -> list[int]:
        snap_dir = self._snapshot_dir(user_id)
        if not snap_dir.is_dir():
            return []
        found = []
        for name in os.listdir(snap_dir):
            m = _SNAPSHOT_RE.match(name)
            if m:
                found.append(int(m.group(1)))
        return sorted(found)

    def save(self, graph: LayeredGraph, created_at: str) -> Path:
        with self.writer_lock(graph.user_id):
            existing = self.versions(graph.user_id)
            if existing and graph.snapshot_version <= existing[-1]:
                raise GraphError(
                    f"snapshot version {graph.snapshot_version} does not advance "
                    f"past persisted version {existing[-1]}"
                )
            path = self._snapshot_dir(graph.user_id) / f"v{graph.snapshot_version:05d}.json"
            atomic_write_json(path, graph_to_document(graph, created_at))
            return path

    def load(self, user_id: str, version: int | None = None) -> LayeredGraph:
        versions = self.versions(user_id)
        if not versions:
            raise NotFoundError(f"no graph snapshots for user {user_id!r}")
        if version is None:
            version = versions[-1]
        elif version not in versions:
            raise NotFoundError(f"user {user_id!r} has no snapshot version {version}")
        path = self._snapshot_dir(user_id) / f"v{version:05d}.json"
        return graph_from_document(read_json(path))
