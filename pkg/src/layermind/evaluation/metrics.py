"""Score arithmetic, aggregation, vocabulary overlap, and the two statistics.

Precision and recall define 0/0 as 0 — a refusal measured against a
non-empty ground truth must hurt recall rather than crash. Headline numbers
are micro-aggregated (sum counts, then compute); per-group score lists are
kept for spread and paired testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy import stats as _scipy_stats

from layermind.errors import PreconditionError
from layermind.textutil import content_tokens


def precision_recall_f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) > 0 else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class ScoreSummary:
    precision: float
    recall: float
    f1: float
    sd: float | None  # sample SD over per-group f1 scores; None when n < 2
    n: int
    tp: int
    fp: int
    fn: int

    def as_dict(self) -> dict:
        return {
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
            "sd": round(self.sd, 6) if self.sd is not None else None,
            "n": self.n,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def summarize_counts(counts: Iterable[tuple[int, int, int]]) -> ScoreSummary:
    """Micro aggregation: sum (tp, fp, fn) triples, then score once.

    The sd field is the sample standard deviation of the per-triple f1
    scores, which callers typically feed per user or per item.
    """
    triples = list(counts)
    tp = sum(t for t, _, _ in triples)
    fp = sum(f for _, f, _ in triples)
    fn = sum(f for _, _, f in triples)
    precision, recall, f1 = precision_recall_f1(tp, fp, fn)
    per_f1 = [precision_recall_f1(*triple)[2] for triple in triples]
    sd = None
    if len(per_f1) >= 2:
        mean = sum(per_f1) / len(per_f1)
        sd = math.sqrt(sum((x - mean) ** 2 for x in per_f1) / (len(per_f1) - 1))
    return ScoreSummary(precision, recall, f1, sd, len(triples), tp, fp, fn)


def aggregate_scores(
    reports: Sequence["object"],
    group_by: str = "overall",
) -> ScoreSummary | dict[str, ScoreSummary]:
    """Aggregate atomic-match reports overall or per layer/user.

    Reports must expose integer ``tp``/``fp``/``fn`` and, for grouped
    aggregation, a ``layer`` or ``user_id`` attribute. Empty groups are
    simply absent from the grouped result; an empty overall aggregation is an
    n=0 summary with zero scores.
    """
    if group_by == "overall":
        return summarize_counts((r.tp, r.fp, r.fn) for r in reports)
    if group_by not in ("layer", "user"):
        raise PreconditionError(f"unknown group_by: {group_by!r}")
    key_attr = "layer" if group_by == "layer" else "user_id"
    grouped: dict[str, list[tuple[int, int, int]]] = {}
    for report in reports:
        key = getattr(report, key_attr, None)
        if key is None:
            continue
        grouped.setdefault(str(key), []).append((report.tp, report.fp, report.fn))
    return {key: summarize_counts(triples) for key, triples in sorted(grouped.items())}


# ----------------------------------------------------------------------
# Vocabulary overlap
# ----------------------------------------------------------------------


def vocabulary(texts: Iterable[str]) -> set[str]:
    """Lowercased, punctuation-stripped, stopword-filtered token set."""
    vocab: set[str] = set()
    for text in texts:
        vocab.update(content_tokens(text))
    return vocab


def jaccard_overlap(node_vocab: set[str], journal_vocab: set[str]) -> float:
    """|A intersect B| / |A union B|; 0 when both sets are empty."""
    union = node_vocab | journal_vocab
    if not union:
        return 0.0
    return len(node_vocab & journal_vocab) / len(union)


# ----------------------------------------------------------------------
# Statistics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float

    def as_dict(self) -> dict:
        if math.isinf(self.t):
            return {"t": None, "p": round(self.p, 6), "degenerate": "zero-variance"}
        return {"t": round(self.t, 6), "p": round(self.p, 6)}


@dataclass(frozen=True)
class PearsonResult:
    r: float | None
    p: float | None

    @property
    def defined(self) -> bool:
        return self.r is not None

    def as_dict(self) -> dict:
        if not self.defined:
            return {"r": None, "p": None, "degenerate": "zero-variance"}
        return {"r": round(self.r, 6), "p": round(self.p, 6)}


def paired_t(pre: Sequence[float], post: Sequence[float]) -> TTestResult:
    """Paired t over (pre - post) differences; two-sided p with n-1 df.

    Zero difference variance yields t=0, p=1 when the means are equal and a
    signed infinite-t marker (p=0) otherwise.
    """
    if len(pre) != len(post):
        raise PreconditionError("paired series must have equal lengths")
    n = len(pre)
    if n < 2:
        raise PreconditionError("paired t needs at least 2 pairs")
    diffs = [a - b for a, b in zip(pre, post)]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, p=1.0)
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0)
    t = mean / math.sqrt(var / n)
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df=n - 1))
    return TTestResult(t=t, p=p)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Sample Pearson correlation with a t-transform p-value.

    Zero variance in either series yields the undefined marker.
    """
    if len(x) != len(y):
        raise PreconditionError("correlated series must have equal lengths")
    n = len(x)
    if n < 3:
        raise PreconditionError("pearson r needs at least 3 pairs")
    mx = sum(x) / n
    my = sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0.0 or syy == 0.0:
        return PearsonResult(r=None, p=None)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return PearsonResult(r=r, p=0.0)
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df=n - 2))
    return PearsonResult(r=r, p=p)
