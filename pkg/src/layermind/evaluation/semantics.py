"""Per-layer semantic alignment: topic coherence, similarity, silhouette.

Coherence follows the sliding-window construction: boolean windows of fixed
size over each document, word probabilities as window frequencies, NPMI
context vectors per top word, and indirect confirmation as the cosine of
each word's vector against the topic's summed vector. Window size 110 and
top-10 terms are fixed constants — comparability across runs depends on them
staying put.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.cluster import HDBSCAN
from sklearn.metrics import silhouette_score

from layermind.consensus import reduce_embeddings
from layermind.embedding import EmbeddingProvider
from layermind.graph.model import LayerTag
from layermind.textutil import content_tokens

WINDOW_SIZE = 110
TOP_TERMS = 10


@dataclass(frozen=True)
class LayerSemantics:
    layer: LayerTag
    coherence: float | None
    mean_pairwise_similarity: float | None
    silhouette: float | None
    topic_count: int | None
    defined: bool = True

    def as_dict(self) -> dict:
        return {
            "layer": self.layer.name,
            "coherence": round(self.coherence, 6) if self.coherence is not None else None,
            "similarity": round(self.mean_pairwise_similarity, 6)
            if self.mean_pairwise_similarity is not None
            else None,
            "silhouette": round(self.silhouette, 6) if self.silhouette is not None else None,
            "topic_count": self.topic_count,
            "defined": self.defined,
        }


def sliding_windows(docs_tokens: Sequence[list[str]], size: int = WINDOW_SIZE) -> list[frozenset[str]]:
    """Boolean sliding windows; a document shorter than the window is one window."""
    windows: list[frozenset[str]] = []
    for tokens in docs_tokens:
        if len(tokens) <= size:
            if tokens:
                windows.append(frozenset(tokens))
            continue
        for i in range(len(tokens) - size + 1):
            windows.append(frozenset(tokens[i : i + size]))
    return windows


def _npmi(p_ij: float, p_i: float, p_j: float) -> float:
    if p_ij <= 0.0:
        return -1.0
    if p_ij >= 1.0:
        # every window holds both words; epsilon-consistent limit is 0
        return 0.0
    return math.log(p_ij / (p_i * p_j)) / (-math.log(p_ij))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def coherence_cv(top_words: Sequence[str], docs_tokens: Sequence[list[str]]) -> float:
    """Sliding-window NPMI with indirect cosine confirmation for one topic.

    Result is clamped to [0, 1]; an empty corpus or word list scores 0.
    """
    words = list(dict.fromkeys(top_words))
    windows = sliding_windows(docs_tokens)
    if not words or not windows:
        return 0.0
    total = len(windows)
    presence = {w: np.array([w in win for win in windows]) for w in words}
    p = {w: presence[w].sum() / total for w in words}
    k = len(words)
    npmi = np.zeros((k, k))
    for i, wi in enumerate(words):
        for j, wj in enumerate(words):
            joint = np.logical_and(presence[wi], presence[wj]).sum() / total
            npmi[i, j] = _npmi(joint, p[wi], p[wj])
    summed = npmi.sum(axis=0)
    phis = [_cosine(npmi[i], summed) for i in range(k)]
    return float(min(1.0, max(0.0, sum(phis) / len(phis))))


def silhouette(points: np.ndarray, labels: Sequence[int]) -> float:
    """Mean silhouette coefficient (euclidean); degenerate labelings score 0."""
    labels = np.asarray(labels)
    unique = set(labels.tolist())
    if len(unique) < 2 or len(labels) <= len(unique):
        return 0.0
    return float(silhouette_score(points, labels, metric="euclidean"))


def mean_pairwise_cosine(vectors: np.ndarray) -> float:
    n = len(vectors)
    if n < 2:
        return 1.0
    norms = np.linalg.norm(vectors, axis=1)
    norms[norms == 0] = 1.0
    unit = vectors / norms[:, None]
    sims = unit @ unit.T
    off_diag = sims[~np.eye(n, dtype=bool)]
    return float(off_diag.mean())


def layer_semantics(
    layer: LayerTag,
    texts: Sequence[str],
    provider: EmbeddingProvider,
    reduce_dim: int = 25,
    min_cluster_size: int = 2,
    seed: int = 7,
) -> LayerSemantics:
    """Embed a layer's node texts, find topics, and score organization.

    Fewer than 3 texts yields the undefined marker. When density clustering
    finds no topic at all, the whole layer is treated as a single topic so
    coherence and topic_count stay defined (silhouette then scores 0).
    """
    if len(texts) < 3:
        return LayerSemantics(layer, None, None, None, None, defined=False)
    vectors = provider.embed(list(texts))
    reduced = reduce_embeddings(vectors, reduce_dim, seed)
    if np.all(reduced == reduced[0]):
        labels = np.zeros(len(texts), dtype=int)
    else:
        labels = HDBSCAN(min_cluster_size=min_cluster_size, allow_single_cluster=True).fit_predict(
            reduced
        )
    topic_ids = sorted({int(l) for l in labels if l >= 0})
    if not topic_ids:
        labels = np.zeros(len(texts), dtype=int)
        topic_ids = [0]
    docs_tokens = [content_tokens(t) for t in texts]
    topic_scores = []
    for topic in topic_ids:
        member_tokens = [
            tok for doc, label in zip(docs_tokens, labels) if label == topic for tok in doc
        ]
        counts = Counter(member_tokens)
        top = [w for w, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_TERMS]]
        topic_scores.append(coherence_cv(top, docs_tokens))
    mask = labels >= 0
    sil = silhouette(reduced[mask], labels[mask]) if mask.sum() > 0 else 0.0
    return LayerSemantics(
        layer=layer,
        coherence=float(sum(topic_scores) / len(topic_scores)),
        mean_pairwise_similarity=mean_pairwise_cosine(vectors),
        silhouette=sil,
        topic_count=len(topic_ids),
    )
