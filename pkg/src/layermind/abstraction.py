"""Phase 2: dimension-guided synthesis of the higher layers.

A single dimension-generation call over a seeded sample of L1 nodes yields
analytical dimensions for L2, L3, and L4 at once. Each layer is then built
strictly in order: for every dimension of that layer, the previous layer's
node titles (titles only, to keep token cost down) are grouped by the
clustering prompt, and each group is synthesized into 1-3 nodes tagged with
the dimension. A layer's node set is the union across its dimensions and
clusters; cross-dimension duplicates are kept.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from layermind.config import AbstractionConfig
from layermind.errors import PreconditionError
from layermind.graph.model import (
    AnalyticalDimension,
    LayerTag,
    LayeredGraph,
    PatternNode,
    next_node_id,
)
from layermind.llm import LlmClient, LlmRequest, ask_json

logger = logging.getLogger(__name__)

HIGHER_LAYERS = (LayerTag.L2, LayerTag.L3, LayerTag.L4)


@dataclass(frozen=True)
class DimensionCluster:
    """A prompt-clustered group of previous-layer nodes under one dimension."""

    dimension_id: str
    cluster_label: str
    member_node_ids: tuple[str, ...]


class LayerEmptyError(PreconditionError):
    """A layer synthesized zero nodes; the pipeline halts at the last good snapshot."""

    def __init__(self, layer: LayerTag):
        self.layer = layer
        super().__init__(f"layer {layer.name} produced zero nodes")


def sample_l1(nodes: Sequence[PatternNode], config: AbstractionConfig) -> list[PatternNode]:
    """Seeded uniform sample without replacement of min(sample_size, |L1|)."""
    if not nodes:
        raise PreconditionError("cannot sample an empty L1 layer")
    ordered = sorted(nodes, key=lambda n: n.id)
    k = min(config.sample_size, len(ordered))
    rng = random.Random(config.seed)
    return rng.sample(ordered, k)


def format_sampled_nodes(nodes: Sequence[PatternNode]) -> str:
    return "\n".join(f"- {n.title}: {n.content}" for n in nodes)


def _validate_dimensions(expected_k: int):
    def check(payload) -> dict:
        if not isinstance(payload, dict):
            raise ValueError("expected a JSON object keyed L2/L3/L4")
        for key in ("L2", "L3", "L4"):
            entries = payload.get(key)
            if not isinstance(entries, list) or len(entries) != expected_k:
                raise ValueError(
                    f"key {key} must hold exactly {expected_k} dimensions, "
                    f"got {len(entries) if isinstance(entries, list) else 'none'}"
                )
            for item in entries:
                if not str(item.get("title", "")).strip() or not str(item.get("description", "")).strip():
                    raise ValueError(f"dimension under {key} needs title and description")
        return payload

    return check


def generate_dimensions(
    sample: Sequence[PatternNode],
    config: AbstractionConfig,
    client: LlmClient,
) -> list[AnalyticalDimension]:
    """One dimension-generation call covering all three higher layers."""
    if not sample:
        raise PreconditionError("dimension generation needs a non-empty sample")
    request = LlmRequest(
        "GD",
        {
            "layer_number": 1,
            "num_dimensions": config.dims_per_layer,
            "sampled_nodes_text": format_sampled_nodes(sample),
        },
    )
    payload = ask_json(client, request, validate=_validate_dimensions(config.dims_per_layer))
    dims: list[AnalyticalDimension] = []
    for key, layer in (("L2", LayerTag.L2), ("L3", LayerTag.L3), ("L4", LayerTag.L4)):
        for i, item in enumerate(payload[key], start=1):
            dims.append(
                AnalyticalDimension(
                    id=f"D{int(layer)}_{i}",
                    layer=layer,
                    title=str(item["title"]).strip(),
                    description=str(item["description"]).strip(),
                )
            )
    return dims


def dimensions_export(dims: Sequence[AnalyticalDimension]) -> dict:
    """JSON export mirroring the dimension-generation output schema."""
    out: dict[str, list[dict]] = {"L2": [], "L3": [], "L4": []}
    for d in sorted(dims, key=lambda d: d.id):
        out[d.layer.name].append({"title": d.title, "description": d.description})
    return out


def _validate_clusters(payload) -> list[dict]:
    if not isinstance(payload, dict) or not isinstance(payload.get("clusters"), list):
        raise ValueError("expected an object with a 'clusters' array")
    for item in payload["clusters"]:
        if not isinstance(item, dict) or not isinstance(item.get("node_indices"), list):
            raise ValueError("each cluster needs a node_indices array")
    return payload["clusters"]


def cluster_by_dimension(
    prev_layer_nodes: Sequence[PatternNode],
    dimension: AnalyticalDimension,
    config: AbstractionConfig,
    client: LlmClient,
) -> list[DimensionCluster]:
    """Group previous-layer nodes under one dimension via the clustering prompt.

    Only node titles are sent (numbered from 1). Out-of-range indices are
    dropped; clusters left with fewer than two members are dropped and
    logged. A node may appear in multiple clusters.
    """
    ordered = sorted(prev_layer_nodes, key=lambda n: n.id)
    expected_layer = LayerTag(int(dimension.layer) - 1)
    for node in ordered:
        if node.layer != expected_layer:
            raise PreconditionError(
                f"dimension {dimension.id} clusters {expected_layer.name} nodes, "
                f"got {node.id} at {node.layer.name}"
            )
    numbered = "\n".join(f"{i}. {n.title}" for i, n in enumerate(ordered, start=1))
    request = LlmRequest(
        "CD",
        {
            "dimension_title": dimension.title,
            "dimension_description": dimension.description,
            "num_clusters": config.clusters_for(len(ordered)),
            "numbered_nodes_text": numbered,
        },
    )
    raw_clusters = ask_json(client, request, validate=_validate_clusters)
    clusters: list[DimensionCluster] = []
    for i, item in enumerate(raw_clusters, start=1):
        members: list[str] = []
        for idx in item["node_indices"]:
            if isinstance(idx, int) and 1 <= idx <= len(ordered):
                node_id = ordered[idx - 1].id
                if node_id not in members:
                    members.append(node_id)
            else:
                logger.warning("dimension %s: dropping out-of-range index %r", dimension.id, idx)
        if len(members) < 2:
            logger.info(
                "dimension %s: dropping cluster %d with %d member(s)", dimension.id, i, len(members)
            )
            continue
        clusters.append(
            DimensionCluster(
                dimension_id=dimension.id,
                cluster_label=str(item.get("cluster_label", f"cluster {i}")),
                member_node_ids=tuple(members),
            )
        )
    if not clusters:
        logger.info("dimension %s yielded no clusters", dimension.id)
    return clusters


def _validate_insights(payload) -> list[dict]:
    if not isinstance(payload, list):
        raise ValueError("expected a JSON array of insight objects")
    for item in payload:
        if not isinstance(item, dict):
            raise ValueError("insight entries must be objects")
        if not str(item.get("title", "")).strip() or not str(item.get("content", "")).strip():
            raise ValueError("insights need non-empty title and content")
        if not isinstance(item.get("source_nodes"), list):
            raise ValueError("insights need a source_nodes array")
    return payload


def synthesize_layer(
    cluster: DimensionCluster,
    dimension: AnalyticalDimension,
    nodes_by_id: dict[str, PatternNode],
    client: LlmClient,
    make_id: Callable[[], str],
) -> list[PatternNode]:
    """Synthesize one dimension cluster into 1-3 nodes of the dimension's layer."""
    members = [nodes_by_id[i] for i in cluster.member_node_ids]
    source_payload = [
        {"node_id": n.id, "title": n.title, "content": n.content} for n in members
    ]
    request = LlmRequest(
        "ID",
        {
            "dimension_title": dimension.title,
            "dimension_description": dimension.description,
            "cluster_label": cluster.cluster_label,
            "source_nodes_json": json.dumps(source_payload, indent=2),
        },
    )
    insights = ask_json(client, request, validate=_validate_insights)
    if len(insights) > 3:
        logger.warning("synthesis returned %d insights; keeping first 3", len(insights))
        insights = insights[:3]
    allowed = set(cluster.member_node_ids)
    nodes: list[PatternNode] = []
    for item in insights:
        sources = [str(s) for s in item["source_nodes"]]
        if not sources or not set(sources) <= allowed:
            logger.warning(
                "dropping insight %r: sources %s outside cluster members", item.get("title"), sources
            )
            continue
        nodes.append(
            PatternNode(
                id=make_id(),
                layer=dimension.layer,
                title=str(item["title"]).strip(),
                content=str(item["content"]).strip(),
                source_ids=tuple(dict.fromkeys(sources)),
                dimension_id=dimension.id,
            )
        )
    return nodes


def build_higher_layers(
    graph: LayeredGraph,
    config: AbstractionConfig,
    client: LlmClient,
    on_layer: Callable[[LayeredGraph], None] | None = None,
) -> LayeredGraph:
    """Run L2 from L1, L3 from L2, L4 from L3; union across dimensions.

    ``on_layer`` fires after each layer lands in a snapshot so a halt leaves
    the last good layer persisted. Raises :class:`LayerEmptyError` when a
    layer synthesizes nothing.
    """
    if graph.phase_state != "l1_built":
        raise PreconditionError(
            f"higher-layer synthesis requires phase_state 'l1_built', got {graph.phase_state!r}"
        )
    l1_nodes = [n for n in graph.layer_nodes(LayerTag.L1)]
    sample = sample_l1(l1_nodes, config)
    dims = generate_dimensions(sample, config, client)
    graph = graph.with_dimensions(dims)
    if on_layer is not None:
        on_layer(graph)
    for layer in HIGHER_LAYERS:
        prev_nodes = [n for n in graph.layer_nodes(LayerTag(int(layer) - 1))]
        nodes_by_id = {n.id: n for n in prev_nodes}
        layer_dims = [d for d in sorted(graph.dimensions.values(), key=lambda d: d.id) if d.layer == layer]
        new_nodes: list[PatternNode] = []
        counter = [0]

        def make_id() -> str:
            node_id = next_node_id(graph, layer, offset=counter[0])
            counter[0] += 1
            return node_id

        for dimension in layer_dims:
            for cluster in cluster_by_dimension(prev_nodes, dimension, config, client):
                new_nodes.extend(
                    synthesize_layer(cluster, dimension, nodes_by_id, client, make_id)
                )
        if not new_nodes:
            raise LayerEmptyError(layer)
        state = "full_built" if layer == LayerTag.L4 else graph.phase_state
        graph = graph.put_nodes(new_nodes, phase_state=state)
        if on_layer is not None:
            on_layer(graph)
    return graph
