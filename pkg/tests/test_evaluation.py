"""Score arithmetic, statistics, semantic metrics, answering, and matching."""

from __future__ import annotations

import datetime as dt
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layermind.embedding import HashingEmbedder
from layermind.errors import LlmFormatError, PreconditionError
from layermind.evaluation import (
    REFUSAL_SENTENCE,
    AtomicMatchReport,
    LikertLog,
    LikertRecord,
    aggregate_scores,
    answer_from_ptm,
    atomic_match,
    build_report,
    coherence_cv,
    generate_testset,
    jaccard_overlap,
    layer_semantics,
    paired_t,
    pearson_r,
    precision_recall_f1,
    report_csvs,
    select_labels,
    silhouette,
    summarize_likert,
    vocabulary,
)
from layermind.graph.model import LayerTag
from layermind.ingestion import JournalEntry
from layermind.llm import ScriptedClient
from layermind.scripted import ScriptedBackend
from tests.conftest import SequenceClient


def report_with(tp, fp, fn, item_id="i", layer=None, user_id=None):
    return AtomicMatchReport(
        item_id=item_id,
        true_positives=tuple(("g", "p") for _ in range(tp)),
        false_negatives=tuple(("g", "e") for _ in range(fn)),
        false_positives=tuple(("p", "", "e") for _ in range(fp)),
        layer=layer,
        user_id=user_id,
    )


class TestScoreArithmetic:
    def test_published_count_row_pre(self):
        p, r, f1 = precision_recall_f1(3628, 1376, 1098)
        assert p * 100 == pytest.approx(72.50, abs=0.01)
        assert r * 100 == pytest.approx(76.77, abs=0.01)
        assert f1 * 100 == pytest.approx(74.57, abs=0.01)

    def test_published_count_row_post(self):
        _, _, f1 = precision_recall_f1(3638, 1299, 1065)
        assert f1 * 100 == pytest.approx(75.48, abs=0.01)

    def test_zero_denominators(self):
        assert precision_recall_f1(0, 0, 0) == (0.0, 0.0, 0.0)
        assert precision_recall_f1(0, 0, 5) == (0.0, 0.0, 0.0)
        assert precision_recall_f1(0, 5, 0) == (0.0, 0.0, 0.0)

    def test_perfect_case(self):
        assert precision_recall_f1(7, 0, 0) == (1.0, 1.0, 1.0)

    def test_hand_arithmetic_triple(self):
        p, r, f1 = precision_recall_f1(3, 1, 1)
        assert (p, r, f1) == (0.75, 0.75, 0.75)

    @given(
        st.integers(min_value=0, max_value=500),
        st.integers(min_value=0, max_value=500),
        st.integers(min_value=0, max_value=500),
    )
    @settings(max_examples=300)
    def test_f1_harmonic_mean_bounds(self, tp, fp, fn):
        p, r, f1 = precision_recall_f1(tp, fp, fn)
        assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12
        if p > 0 and r > 0:
            assert (abs(f1 - p) < 1e-12) == (abs(p - r) < 1e-12)

    def test_micro_aggregation_sums_counts(self):
        reports = [report_with(3, 1, 1, "a"), report_with(1, 0, 2, "b")]
        summary = aggregate_scores(reports, "overall")
        assert (summary.tp, summary.fp, summary.fn) == (4, 1, 3)
        assert summary.n == 2
        assert summary.precision == pytest.approx(4 / 5)

    def test_grouped_by_layer(self):
        reports = [
            report_with(2, 0, 0, "a", layer="L1"),
            report_with(0, 1, 1, "b", layer="L2"),
            report_with(1, 0, 0, "c", layer="L1"),
        ]
        grouped = aggregate_scores(reports, "layer")
        assert set(grouped) == {"L1", "L2"}
        assert grouped["L1"].tp == 3

    def test_empty_overall(self):
        summary = aggregate_scores([], "overall")
        assert summary.n == 0 and summary.f1 == 0.0 and summary.sd is None


class TestJaccard:
    def test_identity(self):
        assert jaccard_overlap({"a", "b"}, {"a", "b"}) == 1.0

    def test_disjoint(self):
        assert jaccard_overlap({"a"}, {"b"}) == 0.0

    def test_hand_case(self):
        assert jaccard_overlap({"a", "b", "c"}, {"b", "c", "d"}) == 0.5

    def test_both_empty(self):
        assert jaccard_overlap(set(), set()) == 0.0

    @given(st.sets(st.integers(0, 30)), st.sets(st.integers(0, 30)))
    @settings(max_examples=200)
    def test_symmetry_and_bounds(self, a, b):
        a = {str(x) for x in a}
        b = {str(x) for x in b}
        j = jaccard_overlap(a, b)
        assert 0.0 <= j <= 1.0
        assert j == jaccard_overlap(b, a)
        if a or b:
            assert (j == 1.0) == (a == b)

    def test_vocabulary_filters_stopwords_and_punct(self):
        vocab = vocabulary(["The user studied, and studied!"])
        assert vocab == {"studied"}


class TestStats:
    def test_paired_t_identical(self):
        result = paired_t([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (result.t, result.p) == (0.0, 1.0)

    def test_paired_t_constant_shift_is_infinite(self):
        result = paired_t([2.0, 3.0, 4.0, 5.0, 6.0], [1.0, 2.0, 3.0, 4.0, 5.0])
        assert math.isinf(result.t) and result.t > 0
        assert result.p == 0.0
        down = paired_t([1.0, 2.0], [2.0, 3.0])
        assert math.isinf(down.t) and down.t < 0

    def test_paired_t_hand_computed(self):
        pre = [74.0, 71.5, 76.2, 72.8, 75.1]
        post = [75.0, 72.0, 75.9, 74.1, 75.6]
        diffs = [a - b for a, b in zip(pre, post)]
        n = len(diffs)
        mean = sum(diffs) / n
        sd = math.sqrt(sum((d - mean) ** 2 for d in diffs) / (n - 1))
        expected_t = mean / (sd / math.sqrt(n))
        result = paired_t(pre, post)
        assert result.t == pytest.approx(expected_t, abs=1e-9)
        assert 0.0 < result.p < 1.0

    def test_paired_t_preconditions(self):
        with pytest.raises(PreconditionError):
            paired_t([1.0], [1.0])
        with pytest.raises(PreconditionError):
            paired_t([1.0, 2.0], [1.0])

    def test_pearson_exact_linear(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        result = pearson_r(x, [2 * v + 1 for v in x])
        assert result.r == pytest.approx(1.0, abs=1e-12)
        assert result.p == 0.0
        anti = pearson_r(x, [-v for v in x])
        assert anti.r == pytest.approx(-1.0, abs=1e-12)

    def test_pearson_hand_computed(self):
        x = [1.0, 2.0, 4.0, 5.0, 9.0]
        y = [2.0, 1.0, 5.0, 4.0, 8.0]
        n = len(x)
        mx, my = sum(x) / n, sum(y) / n
        sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
        sxx = sum((a - mx) ** 2 for a in x)
        syy = sum((b - my) ** 2 for b in y)
        expected = sxy / math.sqrt(sxx * syy)
        result = pearson_r(x, y)
        assert result.r == pytest.approx(expected, abs=1e-12)

    def test_pearson_zero_variance_undefined(self):
        result = pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        assert not result.defined
        assert result.as_dict()["degenerate"] == "zero-variance"

    def test_pearson_needs_three(self):
        with pytest.raises(PreconditionError):
            pearson_r([1.0, 2.0], [1.0, 2.0])


class TestSilhouette:
    def test_hand_computed_two_cluster_fixture(self):
        # 1-D points {0, 1} and {10, 11}; silhouette by direct formula:
        #   s(0): a=1, b=10.5 -> 9.5/10.5 ; s(1): a=1, b=9.5 -> 8.5/9.5 (mirror for the rest)
        points = np.array([[0.0], [1.0], [10.0], [11.0]])
        labels = [0, 0, 1, 1]
        expected = (2 * (9.5 / 10.5) + 2 * (8.5 / 9.5)) / 4
        assert silhouette(points, labels) == pytest.approx(expected, abs=1e-9)

    def test_bounds_on_random_data(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            points = rng.normal(size=(12, 3))
            labels = rng.integers(0, 3, size=12)
            if len(set(labels.tolist())) < 2:
                continue
            value = silhouette(points, labels.tolist())
            assert -1.0 <= value <= 1.0

    def test_degenerate_single_cluster(self):
        assert silhouette(np.zeros((4, 2)), [0, 0, 0, 0]) == 0.0


class TestLayerSemantics:
    def test_two_identical_text_topics(self):
        texts = ["alpha beta gamma delta"] * 4 + ["omega psi chi phi"] * 4
        sem = layer_semantics(LayerTag.L1, texts, HashingEmbedder())
        assert sem.defined
        assert sem.silhouette == pytest.approx(1.0)
        assert sem.topic_count == 2
        vectors = HashingEmbedder().embed(texts[:2])
        assert float(vectors[0] @ vectors[1]) == pytest.approx(1.0)

    def test_tight_vocabulary_beats_scattered(self):
        rng = random.Random(4)
        pool = ["discipline", "integrity", "balance", "purpose", "mastery", "resolve"]
        tight = [" ".join(rng.sample(pool, 4)) for _ in range(6)]
        scattered = [
            " ".join(f"word{rng.randint(0, 500)}" for _ in range(8)) for _ in range(6)
        ]
        sem_tight = layer_semantics(LayerTag.L4, tight, HashingEmbedder())
        sem_scattered = layer_semantics(LayerTag.L1, scattered, HashingEmbedder())
        assert sem_tight.coherence > sem_scattered.coherence

    def test_undefined_marker_below_three(self):
        sem = layer_semantics(LayerTag.L2, ["a", "b"], HashingEmbedder())
        assert not sem.defined
        assert sem.coherence is None

    def test_silhouette_range_always(self):
        texts = [f"text number {i} about topic {i % 3}" for i in range(9)]
        sem = layer_semantics(LayerTag.L3, texts, HashingEmbedder())
        assert -1.0 <= sem.silhouette <= 1.0

    def test_coherence_cv_degenerate_inputs(self):
        assert coherence_cv([], [["a"]]) == 0.0
        assert coherence_cv(["a"], []) == 0.0
        assert 0.0 <= coherence_cv(["a", "b"], [["a", "b"], ["a"], ["b"]]) <= 1.0


class TestSelectLabels:
    def test_contract_on_scripted_backend(self):
        labels = [f"topic {i} title" for i in range(80)]
        picked = select_labels("title about topic 7", labels, 5, ScriptedClient(ScriptedBackend()))
        assert len(picked) == 5
        assert len(set(picked)) == 5
        assert all(0 <= p < 80 for p in picked)

    def test_repair_duplicates_and_fill(self, caplog):
        client = SequenceClient([json.dumps([10, 10, 4])])
        with caplog.at_level("INFO"):
            picked = select_labels("q", [f"l{i}" for i in range(20)], 3, client)
        assert picked == [10, 4, 0]

    def test_out_of_range_repaired(self):
        client = SequenceClient([json.dumps([99, 2, 1])])
        picked = select_labels("q", [f"l{i}" for i in range(5)], 3, client)
        assert picked == [2, 1, 0]

    def test_precondition(self):
        with pytest.raises(PreconditionError):
            select_labels("q", ["only"], 2, SequenceClient([]))


class TestAnswering:
    def test_refusal_on_unrelated_query(self, five_layer_graph):
        client = ScriptedClient(ScriptedBackend())
        answer = answer_from_ptm("what is the capital of zanzibar", five_layer_graph, 3, client)
        assert answer == REFUSAL_SENTENCE

    def test_grounded_answer_from_matching_node(self, five_layer_graph):
        client = ScriptedClient(ScriptedBackend())
        answer = answer_from_ptm(
            "does the user show consistent nighttime academic productivity in the evening",
            five_layer_graph, 5, client,
        )
        assert answer != REFUSAL_SENTENCE
        assert "evening" in answer or "academic" in answer

    def test_context_bounded_by_num_target(self, five_layer_graph):
        client = ScriptedClient(ScriptedBackend())
        answer_from_ptm("nighttime academic work", five_layer_graph, 2, client)
        ca_prompt = next(t["prompt"] for t in client.transcript if t["template_id"] == "CA")
        assert ca_prompt.count("[1.") + ca_prompt.count("[2.") + ca_prompt.count("[3.") + ca_prompt.count("[4.") == 2

    def test_requires_built_graph(self, five_layer_graph):
        ingested = five_layer_graph.with_phase_state("ingested")
        with pytest.raises(PreconditionError):
            answer_from_ptm("q", ingested, 2, SequenceClient([]))


class TestAtomicMatch:
    def test_identity_prediction(self):
        text = "The user studied databases at the library because the midterm was near."
        report = atomic_match("q", text, text, ScriptedClient(ScriptedBackend()), item_id="x")
        assert report.fp == 0 and report.fn == 0
        assert report.tp >= 1

    def test_refusal_against_substantive_truth(self):
        gt = "The user played badminton at the sports hall because the weekly game keeps energy up."
        report = atomic_match("q", REFUSAL_SENTENCE, gt, ScriptedClient(ScriptedBackend()))
        assert report.tp == 0
        assert report.fn >= 1

    def test_counts_equal_list_lengths(self):
        payload = {
            "true_positives": [{"gt_atomic_point": "a", "p_atomic_point": "b", "score": 1.0}] * 3,
            "false_negatives": [{"gt_atomic_point": "c", "explanation": "missing"}],
            "false_positives": [{"p_atomic_point": "d", "gt_atomic_point": "", "explanation": "extra", "score": 1.0}],
        }
        client = SequenceClient([json.dumps(payload)])
        report = atomic_match("q", "pred", "truth", client, item_id="i1")
        assert (report.tp, report.fp, report.fn) == (3, 1, 1)
        p, r, f1 = precision_recall_f1(report.tp, report.fp, report.fn)
        assert (p, r, f1) == (0.75, 0.75, 0.75)

    def test_invalid_json_marks_unevaluated(self):
        client = SequenceClient(["junk", "more junk"])
        with pytest.raises(LlmFormatError):
            atomic_match("q", "p", "g", client)

    def test_empty_inputs_rejected(self):
        with pytest.raises(PreconditionError):
            atomic_match("q", " ", "g", SequenceClient([]))


class TestTestset:
    def _entries(self):
        return [
            JournalEntry(
                id=f"e{i}", user_id="u", date=dt.date(2025, 9, 1 + i),
                text=f"On Monday from 08:00 to 09:00, I studied topic {i} at the library, "
                     f"because review {i} helps, by summarizing chapter {i}.",
            )
            for i in range(4)
        ]

    def test_items_generated_with_hints(self):
        window = (dt.date(2025, 9, 1), dt.date(2025, 9, 5))
        items = generate_testset(self._entries(), window, ScriptedClient(ScriptedBackend()), 10)
        assert 1 <= len(items) <= 10
        assert all(i.query and i.ground_truth for i in items)
        hints = [i.target_layer_hint for i in items[:4]]
        assert hints == [LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4]

    def test_empty_window_rejected(self):
        window = (dt.date(2030, 1, 1), dt.date(2030, 1, 5))
        with pytest.raises(PreconditionError):
            generate_testset(self._entries(), window, SequenceClient([]), 5)

    def test_count_capped(self):
        window = (dt.date(2025, 9, 1), dt.date(2025, 9, 5))
        items = generate_testset(self._entries(), window, ScriptedClient(ScriptedBackend()), 2)
        assert len(items) == 2


class TestLikert:
    def test_record_and_summaries(self, tmp_path):
        log = LikertLog(tmp_path / "likert.jsonl")
        for rating in (4, 5, 4):
            log.record(LikertRecord("n1", "pre_hitl", rating))
        log.record(LikertRecord("n2", "post_hitl", 5))
        summary = summarize_likert(log.records(), {"n1": "L1", "n2": "L2"})
        pre = summary["overall"]["pre_hitl"]
        assert pre["n"] == 3
        assert pre["mean"] == pytest.approx(13 / 3, abs=1e-6)
        assert summary["by_layer"]["L1"]["pre_hitl"]["n"] == 3

    def test_normalization_is_affine_not_ratio(self, tmp_path):
        # mean 4.26 maps to 81.5, not 85.2
        ratings = [4] * 37 + [5] * 13  # mean 4.26
        log = LikertLog(tmp_path / "l.jsonl")
        for r in ratings:
            log.record(LikertRecord("n", "pre_hitl", r))
        summary = summarize_likert(log.records(), {"n": "L1"})
        assert summary["overall"]["pre_hitl"]["mean"] == pytest.approx(4.26)
        assert summary["overall"]["pre_hitl"]["normalized_pct"] == pytest.approx(81.5, abs=0.01)

    def test_out_of_range_rejected(self):
        with pytest.raises(PreconditionError):
            LikertRecord("n", "pre_hitl", 6)
        with pytest.raises(PreconditionError):
            LikertRecord("n", "pre_hitl", 0)
        with pytest.raises(PreconditionError):
            LikertRecord("n", "mid_hitl", 3)


class TestReport:
    def test_report_and_csvs(self):
        reports = [report_with(3, 1, 1, "a", layer="L1"), report_with(2, 2, 0, "b", layer="L2")]
        report = build_report("pre", reports, jaccard_by_layer={"L1": 0.5, "L4": 0.1})
        assert report["condition"] == "pre"
        assert report["overall"]["tp"] == 5
        csvs = report_csvs(report)
        assert "overall" in csvs and "by_layer" in csvs
        assert csvs["overall"].startswith("condition,")
        assert "L1" in csvs["by_layer"]
