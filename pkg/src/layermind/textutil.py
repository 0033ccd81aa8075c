"""Tokenization helpers and the shipped stopword list.

The stopword list and tokenizer are fixed assets: vocabulary-overlap numbers
are only comparable across runs if these stay frozen, so they live in the
package rather than being pulled from an external corpus at runtime.
"""

from __future__ import annotations

import re
from functools import lru_cache

from layermind.prompts import asset_root

_WORD_RE = re.compile(r"[a-z0-9']+")


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    path = asset_root() / "stopwords.txt"
    words = [w.strip() for w in path.read_text(encoding="utf-8").splitlines()]
    return frozenset(w for w in words if w)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens, punctuation stripped."""
    return _WORD_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    """Tokens with stopwords and single characters removed."""
    stop = stopwords()
    return [t for t in tokenize(text) if len(t) > 1 and t not in stop]


def sentences(text: str) -> list[str]:
    """Split on terminal punctuation, keeping non-empty trimmed sentences."""
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p.strip() for p in parts if p.strip()]
