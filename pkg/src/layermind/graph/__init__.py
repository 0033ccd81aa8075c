"""Layered knowledge-graph model and its versioned file store."""

from layermind.graph.model import (
    ADJACENT_PAIRS,
    AnalyticalDimension,
    BehavioralInstance,
    InDegreeStats,
    LayerTag,
    LayeredGraph,
    Node,
    PatternNode,
    Revision,
    next_node_id,
    parse_when,
)
from layermind.graph.store import (
    GraphStore,
    atomic_write_json,
    export_document,
    graph_from_document,
    graph_to_document,
    read_json,
)

__all__ = [
    "ADJACENT_PAIRS",
    "AnalyticalDimension",
    "BehavioralInstance",
    "GraphStore",
    "InDegreeStats",
    "LayerTag",
    "LayeredGraph",
    "Node",
    "PatternNode",
    "Revision",
    "atomic_write_json",
    "export_document",
    "graph_from_document",
    "graph_to_document",
    "next_node_id",
    "parse_when",
    "read_json",
]
