"""Phase 1 pattern discovery.

Six independent base clusterings (one per 5W1H attribute: embed, reduce,
density-cluster) feed a weighted consensus matrix. For instances i, j the raw
score R sums the weights of attributes on which both carry the same non-noise
cluster label; a temporal penalty P of 2 applies to same-date pairs; the final
score is S = R - P. Pairs with S >= tau connect, clusters are the connected
components of size >= 2, and each cluster is synthesized into 1-3 L1 nodes.

Noise never matches noise: counting two outliers as agreeing would fabricate
similarity, so outlier labels contribute zero to R.
"""

from __future__ import annotations

import datetime as dt
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import HDBSCAN
from sklearn.decomposition import PCA

from layermind.config import ATTRIBUTES, ConsensusConfig
from layermind.embedding import EmbeddingProvider
from layermind.errors import PreconditionError
from layermind.graph.model import BehavioralInstance, LayerTag, PatternNode
from layermind.llm import LlmClient, LlmRequest, ask_json

logger = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class AttributeAssignment:
    """Base clustering of every instance for one 5W1H attribute."""

    attribute: str
    labels: Mapping[str, int]


@dataclass(frozen=True)
class ConsensusMatrix:
    """Pairwise R, P, S integer matrices over an ordered instance id list."""

    instance_ids: tuple[str, ...]
    R: np.ndarray
    P: np.ndarray
    S: np.ndarray
    dates: Mapping[str, dt.date] = field(default_factory=dict)

    def index_of(self, instance_id: str) -> int:
        return self.instance_ids.index(instance_id)


@dataclass(frozen=True)
class ClusterSet:
    """Disjoint stable clusters (size >= 2) plus the ids left unclustered."""

    clusters: tuple[tuple[str, ...], ...]
    unclustered: tuple[str, ...]


def reduce_embeddings(vectors: np.ndarray, reduce_dim: int, seed: int) -> np.ndarray:
    """Variance-preserving reduction to ``reduce_dim`` components.

    Skipped (with a log line) when there are fewer points than target
    dimensions; full-SVD PCA keeps the output bit-reproducible.
    """
    n, width = vectors.shape
    if n < reduce_dim or width <= reduce_dim:
        logger.info("skipping reduction: %d points, %d dims, target %d", n, width, reduce_dim)
        return vectors
    reducer = PCA(n_components=reduce_dim, svd_solver="full", random_state=seed)
    return reducer.fit_transform(vectors)


def base_cluster(
    instances: Sequence[BehavioralInstance],
    attribute: str,
    config: ConsensusConfig,
    provider: EmbeddingProvider,
) -> AttributeAssignment:
    """Embed one attribute's texts, reduce, and density-cluster.

    Outliers get the NOISE label. Identical texts embed identically and are
    guaranteed a shared label (degenerate all-identical input shortcuts the
    clusterer, which cannot split a single point mass anyway).
    """
    if attribute not in ATTRIBUTES:
        raise PreconditionError(f"unknown attribute: {attribute!r}")
    if len(instances) < 2:
        raise PreconditionError("base clustering needs at least 2 instances")
    ordered = sorted(instances, key=lambda i: i.id)
    texts = [inst.attribute(attribute) for inst in ordered]
    vectors = provider.embed(texts)
    if np.all(vectors == vectors[0]):
        labels = np.zeros(len(ordered), dtype=int)
    else:
        reduced = reduce_embeddings(vectors, config.reduce_dim, config.seed)
        clusterer = HDBSCAN(
            min_cluster_size=max(2, config.min_cluster_size),
            allow_single_cluster=True,
        )
        labels = clusterer.fit_predict(reduced)
    return AttributeAssignment(
        attribute=attribute,
        labels={inst.id: int(label) for inst, label in zip(ordered, labels)},
    )


def base_cluster_all(
    instances: Sequence[BehavioralInstance],
    config: ConsensusConfig,
    provider: EmbeddingProvider,
) -> list[AttributeAssignment]:
    """All six base clusterings; independent, order fixed by ATTRIBUTES."""
    return [base_cluster(instances, attr, config, provider) for attr in ATTRIBUTES]


def build_consensus(
    assignments: Sequence[AttributeAssignment],
    dates: Mapping[str, dt.date],
    config: ConsensusConfig,
) -> ConsensusMatrix:
    """Weighted co-occurrence scores over every instance pair.

    R(i, j) sums w(a) over attributes where both instances share a non-noise
    label; P(i, j) is the same-date penalty; S = R - P. Matrices are
    symmetric integer arrays with a zeroed diagonal.
    """
    by_attr = {a.attribute: a for a in assignments}
    missing_attrs = set(ATTRIBUTES) - set(by_attr)
    if missing_attrs:
        raise PreconditionError(f"missing attribute assignments: {sorted(missing_attrs)}")
    ids = tuple(sorted(dates))
    for attr in ATTRIBUTES:
        not_covered = [i for i in ids if i not in by_attr[attr].labels]
        if not_covered:
            raise PreconditionError(
                f"attribute {attr!r} has no label for instances {not_covered[:5]}"
            )
    n = len(ids)
    R = np.zeros((n, n), dtype=np.int64)
    for attr in ATTRIBUTES:
        labels = np.array([by_attr[attr].labels[i] for i in ids])
        same = (labels[:, None] == labels[None, :]) & (labels[:, None] != NOISE)
        R += config.weights[attr] * same.astype(np.int64)
    date_keys = np.array([dates[i].toordinal() for i in ids])
    P = config.same_date_penalty * (date_keys[:, None] == date_keys[None, :]).astype(np.int64)
    np.fill_diagonal(R, 0)
    np.fill_diagonal(P, 0)
    S = R - P
    return ConsensusMatrix(instance_ids=ids, R=R, P=P, S=S, dates=dict(dates))


def form_clusters(matrix: ConsensusMatrix, config: ConsensusConfig) -> ClusterSet:
    """Connected components of the S >= tau graph; singletons stay unclustered.

    Components are ordered by earliest instance date (then id); members are
    ordered the same way.
    """
    n = len(matrix.instance_ids)
    if n == 0:
        return ClusterSet(clusters=(), unclustered=())
    adjacency = csr_matrix(matrix.S >= config.tau)
    _, component = connected_components(adjacency, directed=False)
    groups: dict[int, list[str]] = {}
    for idx, comp in enumerate(component):
        groups.setdefault(int(comp), []).append(matrix.instance_ids[idx])

    def member_key(instance_id: str):
        date = matrix.dates.get(instance_id)
        return (date.isoformat() if date else "", instance_id)

    clusters = []
    unclustered = []
    for members in groups.values():
        if len(members) >= 2:
            clusters.append(tuple(sorted(members, key=member_key)))
        else:
            unclustered.extend(members)
    clusters.sort(key=lambda c: member_key(c[0]))
    return ClusterSet(clusters=tuple(clusters), unclustered=tuple(sorted(unclustered)))


# ----------------------------------------------------------------------
# L1 synthesis
# ----------------------------------------------------------------------


def format_instances_text(instances: Sequence[BehavioralInstance]) -> str:
    blocks = []
    for inst in instances:
        blocks.append(
            "\n".join(
                (
                    f"ID: {inst.id}",
                    f"WHAT: {inst.what}",
                    f"WHEN: {inst.when}",
                    f"WHERE: {inst.where}",
                    f"WHO: {inst.who}",
                    f"WHY: {inst.why}",
                    f"HOW: {inst.how}",
                )
            )
        )
    return "\n\n".join(blocks)


def _validate_patterns(payload) -> list[dict]:
    if not isinstance(payload, list):
        raise ValueError("expected a JSON array of pattern objects")
    for item in payload:
        if not isinstance(item, dict):
            raise ValueError("pattern entries must be objects")
        if not str(item.get("title", "")).strip() or not str(item.get("content", "")).strip():
            raise ValueError("patterns need non-empty title and content")
        if not isinstance(item.get("source_instances"), list):
            raise ValueError("patterns need a source_instances array")
    return payload


def synthesize_l1(
    cluster: Sequence[BehavioralInstance],
    client: LlmClient,
    make_id: Callable[[], str],
) -> list[PatternNode]:
    """Synthesize one cluster into 1-3 L1 pattern nodes.

    Nodes citing ids outside the cluster are dropped and logged; at most
    three are kept (the prompt's stated bound).
    """
    if len(cluster) < 2:
        raise PreconditionError("L1 synthesis needs a cluster of size >= 2")
    cluster_ids = [inst.id for inst in cluster]
    request = LlmRequest(
        "IO",
        {
            "instance_ids_json": json.dumps(cluster_ids),
            "instances_text": format_instances_text(cluster),
        },
    )
    patterns = ask_json(client, request, validate=_validate_patterns)
    if len(patterns) > 3:
        logger.warning("L1 synthesis returned %d patterns; keeping first 3", len(patterns))
        patterns = patterns[:3]
    allowed = set(cluster_ids)
    nodes: list[PatternNode] = []
    for item in patterns:
        sources = [str(s) for s in item["source_instances"]]
        if not sources or not set(sources) <= allowed:
            logger.warning(
                "dropping synthesized pattern %r: sources %s not contained in cluster",
                item.get("title"),
                sources,
            )
            continue
        nodes.append(
            PatternNode(
                id=make_id(),
                layer=LayerTag.L1,
                title=str(item["title"]).strip(),
                content=str(item["content"]).strip(),
                source_ids=tuple(dict.fromkeys(sources)),
            )
        )
    return nodes


def consensus_csv(matrix: ConsensusMatrix) -> str:
    """Debug dump: one CSV section per matrix (R, P, S) with an id header."""
    out = io.StringIO()
    header = ",".join(("id", *matrix.instance_ids))
    for name, grid in (("R", matrix.R), ("P", matrix.P), ("S", matrix.S)):
        out.write(f"# {name}\n{header}\n")
        for i, instance_id in enumerate(matrix.instance_ids):
            row = ",".join(str(int(v)) for v in grid[i])
            out.write(f"{instance_id},{row}\n")
    return out.getvalue()
