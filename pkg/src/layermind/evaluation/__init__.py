"""Fidelity evaluation harness: QA generation, answering, atomic matching,
score aggregation, semantic alignment metrics, Likert capture, statistics."""

from layermind.evaluation.atomic import (
    REFUSAL_SENTENCE,
    AtomicMatchReport,
    QaItem,
    answer_from_ptm,
    atomic_match,
    generate_testset,
    select_labels,
)
from layermind.evaluation.likert import LikertLog, LikertRecord, summarize_likert
from layermind.evaluation.metrics import (
    PearsonResult,
    ScoreSummary,
    TTestResult,
    aggregate_scores,
    jaccard_overlap,
    paired_t,
    pearson_r,
    precision_recall_f1,
    summarize_counts,
    vocabulary,
)
from layermind.evaluation.report import build_report, report_csvs, write_report_csvs
from layermind.evaluation.semantics import (
    LayerSemantics,
    coherence_cv,
    layer_semantics,
    mean_pairwise_cosine,
    silhouette,
    sliding_windows,
)

__all__ = [
    "AtomicMatchReport",
    "LayerSemantics",
    "LikertLog",
    "LikertRecord",
    "PearsonResult",
    "QaItem",
    "REFUSAL_SENTENCE",
    "ScoreSummary",
    "TTestResult",
    "aggregate_scores",
    "answer_from_ptm",
    "atomic_match",
    "build_report",
    "coherence_cv",
    "generate_testset",
    "jaccard_overlap",
    "layer_semantics",
    "mean_pairwise_cosine",
    "paired_t",
    "pearson_r",
    "precision_recall_f1",
    "report_csvs",
    "select_labels",
    "silhouette",
    "sliding_windows",
    "summarize_counts",
    "summarize_likert",
    "vocabulary",
    "write_report_csvs",
]
