"""Layered knowledge-graph data model.

Five layers: L0 holds atomic 5W1H behavioral instances extracted from journal
entries; L1-L4 hold synthesized nodes whose ``source_ids`` always point one
layer down. Graphs are immutable value objects; every mutation returns a new
snapshot with ``snapshot_version + 1``.
"""

from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, Mapping, Union

from layermind.errors import (
    DanglingSourceError,
    DuplicateIdError,
    GraphError,
    NonAdjacentLayerError,
    NotFoundError,
)

PHASE_STATES = ("ingested", "l1_built", "full_built", "refined")

_TIME_WINDOW_RE = re.compile(r"(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})")
_WEEKDAYS = (
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
)


class LayerTag(IntEnum):
    """Graph layer with total order L0 < L1 < L2 < L3 < L4."""

    L0 = 0
    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4

    @classmethod
    def parse(cls, value: Union[str, int, "LayerTag"]) -> "LayerTag":
        if isinstance(value, LayerTag):
            return value
        if isinstance(value, int):
            return cls(value)
        name = value.strip().upper()
        if name in cls.__members__:
            return cls[name]
        raise GraphError(f"unknown layer tag: {value!r}")

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.name


SYNTH_LAYERS = (LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4)
ADJACENT_PAIRS = (
    (LayerTag.L1, LayerTag.L2),
    (LayerTag.L2, LayerTag.L3),
    (LayerTag.L3, LayerTag.L4),
)


def parse_when(when: str) -> tuple[str | None, tuple[dt.time, dt.time] | None]:
    """Parse a ``Day, HH:MM-HH:MM`` style phrase into (weekday, time window).

    Anything that does not carry a recognizable window yields ``(weekday?, None)``
    so the raw text is preserved on the instance unchanged.
    """
    weekday = None
    lowered = when.lower()
    for day in _WEEKDAYS:
        if day in lowered:
            weekday = day.capitalize()
            break
    m = _TIME_WINDOW_RE.search(when)
    if not m:
        return weekday, None
    try:
        start = dt.time(int(m.group(1)), int(m.group(2)))
        end = dt.time(int(m.group(3)), int(m.group(4)))
    except ValueError:
        return weekday, None
    return weekday, (start, end)


@dataclass(frozen=True)
class BehavioralInstance:
    """One atomic 5W1H event (an L0 record) with date and journal provenance."""

    id: str
    what: str
    when: str
    where: str
    who: str
    why: str
    how: str
    date: dt.date
    journal_entry_id: str
    time_window: tuple[dt.time, dt.time] | None = None

    layer = LayerTag.L0

    def __post_init__(self):
        if not self.what.strip():
            raise GraphError(f"instance {self.id!r}: `what` must be non-empty")
        if not isinstance(self.date, dt.date):
            raise GraphError(f"instance {self.id!r}: date must be a calendar date")

    def attribute(self, name: str) -> str:
        """Text of one 5W1H attribute (``what`` .. ``how``)."""
        return getattr(self, name)


@dataclass(frozen=True)
class Revision:
    """One append-only refinement record: the content that was replaced."""

    timestamp: str
    prior_content: str
    feedback_id: str


@dataclass(frozen=True)
class PatternNode:
    """A synthesized node at layer L1-L4.

    ``source_ids`` reference nodes in the immediately lower layer. L1 nodes
    carry no ``dimension_id``; L2-L4 nodes carry exactly one.
    """

    id: str
    layer: LayerTag
    title: str
    content: str
    source_ids: tuple[str, ...]
    dimension_id: str | None = None
    revisions: tuple[Revision, ...] = ()

    def __post_init__(self):
        if self.layer not in SYNTH_LAYERS:
            raise GraphError(f"node {self.id!r}: layer must be L1-L4, got {self.layer}")
        if not self.title.strip():
            raise GraphError(f"node {self.id!r}: title must be non-empty")
        if not self.source_ids:
            raise GraphError(f"node {self.id!r}: source_ids must be non-empty")
        if self.layer == LayerTag.L1 and self.dimension_id is not None:
            raise GraphError(f"node {self.id!r}: L1 nodes carry no dimension_id")
        if self.layer != LayerTag.L1 and not self.dimension_id:
            raise GraphError(f"node {self.id!r}: {self.layer} nodes require a dimension_id")

    def revised(self, new_content: str, feedback_id: str, timestamp: str) -> "PatternNode":
        """Return a copy with ``new_content`` and the prior content appended to revisions."""
        rev = Revision(timestamp=timestamp, prior_content=self.content, feedback_id=feedback_id)
        return replace(self, content=new_content, revisions=self.revisions + (rev,))


Node = Union[BehavioralInstance, PatternNode]


@dataclass(frozen=True)
class AnalyticalDimension:
    """An analytical lens (title + description) guiding L2-L4 clustering/synthesis."""

    id: str
    layer: LayerTag
    title: str
    description: str

    def __post_init__(self):
        if self.layer not in (LayerTag.L2, LayerTag.L3, LayerTag.L4):
            raise GraphError(f"dimension {self.id!r}: layer must be L2-L4")
        if not self.title.strip():
            raise GraphError(f"dimension {self.id!r}: title must be non-empty")


@dataclass(frozen=True)
class InDegreeStats:
    mean: float
    sd: float
    total_links: int
    min: int
    max: int


@dataclass(frozen=True)
class LayeredGraph:
    """Per-user DAG over L0-L4 with adjacent-layer edges and snapshot versioning."""

    user_id: str
    nodes: Mapping[str, Node] = field(default_factory=dict)
    dimensions: Mapping[str, AnalyticalDimension] = field(default_factory=dict)
    snapshot_version: int = 0
    phase_state: str = "ingested"

    # ------------------------------------------------------------------
    # Reads
    # ------------------------------------------------------------------

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node id: {node_id!r}") from None

    def layer_nodes(self, layer: LayerTag) -> list[Node]:
        """Nodes of one layer, ordered by id for determinism."""
        return [n for _, n in sorted(self.nodes.items()) if n.layer == layer]

    def layer_sizes(self) -> dict[LayerTag, int]:
        sizes = {tag: 0 for tag in LayerTag}
        for n in self.nodes.values():
            sizes[n.layer] += 1
        return sizes

    def in_degree_stats(self, pair: tuple[LayerTag, LayerTag]) -> InDegreeStats:
        """Link stats for one adjacent layer pair (lower, upper).

        Mean in-degree is total links into the upper layer divided by the
        count of upper-layer nodes; sd is the population standard deviation.
        An empty upper layer yields all-zero stats.
        """
        lower, upper = pair
        if int(upper) - int(lower) != 1 or upper not in SYNTH_LAYERS:
            raise GraphError(f"not an adjacent synthesized pair: ({lower}, {upper})")
        degrees = [len(n.source_ids) for n in self.layer_nodes(upper)]
        if not degrees:
            return InDegreeStats(0.0, 0.0, 0, 0, 0)
        total = sum(degrees)
        mean = total / len(degrees)
        var = sum((d - mean) ** 2 for d in degrees) / len(degrees)
        return InDegreeStats(mean, var ** 0.5, total, min(degrees), max(degrees))

    def trace_to_evidence(self, node_id: str) -> list[BehavioralInstance]:
        """Transitive closure of source links down to L0.

        Deduplicated, ordered by instance date then id. An L0 id yields a
        singleton list containing itself.
        """
        start = self.node(node_id)
        seen: set[str] = set()
        out: list[BehavioralInstance] = []
        stack = [start]
        while stack:
            current = stack.pop()
            if isinstance(current, BehavioralInstance):
                if current.id not in seen:
                    seen.add(current.id)
                    out.append(current)
                continue
            for src in current.source_ids:
                stack.append(self.node(src))
        out.sort(key=lambda inst: (inst.date.isoformat(), inst.id))
        return out

    # ------------------------------------------------------------------
    # Writes (return new snapshots)
    # ------------------------------------------------------------------

    def put_nodes(self, new_nodes: Iterable[Node], phase_state: str | None = None) -> "LayeredGraph":
        """Insert nodes, validating all invariants, and bump the version by one.

        Nodes later in the batch may reference nodes earlier in the same batch.
        """
        merged: dict[str, Node] = dict(self.nodes)
        for node in new_nodes:
            if node.id in merged:
                raise DuplicateIdError(node.id)
            if isinstance(node, PatternNode):
                self._validate_sources(node, merged)
                self._validate_dimension(node)
            merged[node.id] = node
        state = phase_state if phase_state is not None else self.phase_state
        if state not in PHASE_STATES:
            raise GraphError(f"unknown phase state: {state!r}")
        return LayeredGraph(
            user_id=self.user_id,
            nodes=merged,
            dimensions=self.dimensions,
            snapshot_version=self.snapshot_version + 1,
            phase_state=state,
        )

    def with_dimensions(self, dims: Iterable[AnalyticalDimension]) -> "LayeredGraph":
        """Register analytical dimensions; bumps the version like any write."""
        merged = dict(self.dimensions)
        for d in dims:
            if d.id in merged:
                raise DuplicateIdError(d.id)
            merged[d.id] = d
        return LayeredGraph(
            user_id=self.user_id,
            nodes=self.nodes,
            dimensions=merged,
            snapshot_version=self.snapshot_version + 1,
            phase_state=self.phase_state,
        )

    def revise_node(
        self,
        node_id: str,
        new_content: str,
        feedback_id: str,
        timestamp: str,
        phase_state: str | None = None,
    ) -> "LayeredGraph":
        """Replace one node's content, appending a revision record.

        Only content and revisions change; id, layer, sources, and dimension
        are untouched. Used by the human-in-the-loop refinement phase, which
        may flip the phase state on the same snapshot when a session closes.
        """
        node = self.node(node_id)
        if not isinstance(node, PatternNode):
            raise GraphError(f"node {node_id!r} is an L0 instance and cannot be revised")
        state = phase_state if phase_state is not None else self.phase_state
        if state not in PHASE_STATES:
            raise GraphError(f"unknown phase state: {state!r}")
        merged = dict(self.nodes)
        merged[node_id] = node.revised(new_content, feedback_id, timestamp)
        return LayeredGraph(
            user_id=self.user_id,
            nodes=merged,
            dimensions=self.dimensions,
            snapshot_version=self.snapshot_version + 1,
            phase_state=state,
        )

    def with_phase_state(self, state: str) -> "LayeredGraph":
        if state not in PHASE_STATES:
            raise GraphError(f"unknown phase state: {state!r}")
        return LayeredGraph(
            user_id=self.user_id,
            nodes=self.nodes,
            dimensions=self.dimensions,
            snapshot_version=self.snapshot_version + 1,
            phase_state=state,
        )

    # ------------------------------------------------------------------
    # Validation helpers
    # ------------------------------------------------------------------

    def _validate_sources(self, node: PatternNode, pool: Mapping[str, Node]) -> None:
        missing = [s for s in node.source_ids if s not in pool]
        if missing:
            raise DanglingSourceError(node.id, missing)
        expected = LayerTag(int(node.layer) - 1)
        for src_id in node.source_ids:
            src = pool[src_id]
            if src.layer != expected:
                raise NonAdjacentLayerError(node.id, node.layer.name, src_id, src.layer.name)

    def _validate_dimension(self, node: PatternNode) -> None:
        if node.layer == LayerTag.L1:
            return
        dim = self.dimensions.get(node.dimension_id)
        if dim is None:
            raise GraphError(
                f"node {node.id!r}: dimension {node.dimension_id!r} is not registered"
            )
        if dim.layer != node.layer:
            raise GraphError(
                f"node {node.id!r}: dimension {node.dimension_id!r} targets {dim.layer}, "
                f"node is {node.layer}"
            )

    def check_invariants(self) -> None:
        """Full structural audit: adjacency, acyclicity, evidence reachability."""
        for node in self.nodes.values():
            if isinstance(node, PatternNode):
                self._validate_sources(node, self.nodes)
                self._validate_dimension(node)
                if not self.trace_to_evidence(node.id):
                    raise GraphError(f"node {node.id!r} is not traceable to any L0 instance")
        # Adjacent, strictly-descending edges cannot form a cycle; the trace
        # walk above would recurse forever on one, so reaching here is proof.


def next_node_id(graph: LayeredGraph, layer: LayerTag, offset: int = 0) -> str:
    """Deterministic layer-prefixed id from (layer, creation counter)."""
    count = sum(1 for n in graph.nodes.values() if n.layer == layer)
    return f"{layer.name}_{count + offset + 1:04d}"
