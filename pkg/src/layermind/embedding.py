"""Embedding providers behind a single contract.

The contract: ``embed(texts)`` returns one fixed-dimension real vector per
text, and the same text always maps to the same vector. The default
desk-scale provider is a deterministic feature hasher — no model download, no
float nondeterminism — which is what the reproducible test pipeline runs on.
A sentence-transformer provider is available for live deployments.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np

from layermind.errors import EmbeddingError


class EmbeddingProvider(Protocol):
    dim: int
    name: str

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic bag-of-features embedding.

    Word tokens and character trigrams hash into ``dim`` signed buckets;
    vectors are L2-normalized. Identical texts embed identically; texts
    sharing vocabulary land close in cosine distance, which is all the
    downstream density clustering needs at fixture scale.
    """

    def __init__(self, dim: int = 384):
        self.dim = dim
        self.name = f"hashing-{dim}"

    def _features(self, text: str) -> list[str]:
        tokens = text.lower().split()
        feats = list(tokens)
        for tok in tokens:
            padded = f"#{tok}#"
            feats.extend(padded[i : i + 3] for i in range(len(padded) - 2))
        return feats

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for feat in self._features(text):
                digest = hashlib.sha1(feat.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "big") % self.dim
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[row, bucket] += sign
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
        return out


class SentenceTransformerEmbedder:
    """MiniLM-family provider for live runs. Imported lazily; heavy."""

    def __init__(self, model_name: str = "sentence-transformers/all-MiniLM-L6-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover - live-only path
            raise EmbeddingError(
                "sentence-transformers is not installed; use the hashing provider "
                "or install the 'live' extra"
            ) from exc
        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.name = model_name

    def embed(self, texts: Sequence[str]) -> np.ndarray:  # pragma: no cover - live-only path
        vectors = self._model.encode(list(texts), normalize_embeddings=True)
        return np.asarray(vectors, dtype=np.float64)


def make_provider(kind: str, dim: int = 384) -> EmbeddingProvider:
    if kind == "hashing":
        return HashingEmbedder(dim=dim)
    if kind == "sentence-transformer":
        return SentenceTransformerEmbedder()
    raise EmbeddingError(f"unknown embedding provider kind: {kind!r}")
