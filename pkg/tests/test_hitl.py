"""Review sessions: allocation, questions, refinement, T-unit counting."""

from __future__ import annotations

import json

import pytest

from layermind.errors import PreconditionError
from layermind.graph.model import LayerTag
from layermind.hitl import (
    allocate_counts,
    apply_feedback,
    count_t_units,
    generate_question,
    open_session,
    session_from_doc,
    session_report,
    session_to_doc,
    skip_item,
    word_count,
)
from layermind.llm import ScriptedClient
from layermind.scripted import ScriptedBackend
from tests.conftest import SequenceClient


class TestAllocation:
    def test_cohort_shaped_sizes(self):
        sizes = {LayerTag.L1: 73, LayerTag.L2: 37, LayerTag.L3: 28, LayerTag.L4: 18}
        quota = allocate_counts(sizes, 18)
        assert quota == {LayerTag.L1: 9, LayerTag.L2: 4, LayerTag.L3: 3, LayerTag.L4: 2}

    def test_exhaustion(self):
        sizes = {LayerTag.L1: 3, LayerTag.L2: 2, LayerTag.L3: 2, LayerTag.L4: 1}
        quota = allocate_counts(sizes, 8)
        assert quota == sizes

    def test_more_items_than_nodes_caps(self):
        sizes = {LayerTag.L1: 2, LayerTag.L2: 1, LayerTag.L3: 1, LayerTag.L4: 1}
        quota = allocate_counts(sizes, 18)
        assert sum(quota.values()) == 5

    def test_remainder_goes_to_lower_layers(self):
        sizes = {LayerTag.L1: 10, LayerTag.L2: 10, LayerTag.L3: 10, LayerTag.L4: 10}
        quota = allocate_counts(sizes, 18)
        # 4.5 each -> floors 4, remainder 2 -> L1 and L2
        assert quota == {LayerTag.L1: 5, LayerTag.L2: 5, LayerTag.L3: 4, LayerTag.L4: 4}

    def test_empty_graph_rejected(self):
        with pytest.raises(PreconditionError):
            allocate_counts({}, 18)


class TestQuestions:
    def test_scripted_question_from_node(self, five_layer_graph):
        node = five_layer_graph.node("1.5")
        question = generate_question(node, ScriptedClient(ScriptedBackend()))
        assert "?" in question
        assert "Is it true" in question or "user" in question.lower()

    def test_fallback_on_empty_generation(self, five_layer_graph):
        node = five_layer_graph.node("2.3")
        client = SequenceClient([json.dumps([])])
        question = generate_question(node, client)
        assert question == f"Is it true that {node.title}? Please explain."

    def test_first_generated_query_is_used(self, five_layer_graph):
        node = five_layer_graph.node("2.3")
        client = SequenceClient([json.dumps([
            {"query": "Is it true that you feel more satisfied after completing a task if it was very difficult?",
             "ground_truth": "ignored at node scope"},
            {"query": "What exactly do you do during that time?", "ground_truth": "also ignored"},
        ])])
        question = generate_question(node, client)
        assert question == (
            "Is it true that you feel more satisfied after completing a task if it was very difficult?"
        )


class TestOpenSession:
    def test_session_shape_and_determinism(self, five_layer_graph):
        client = ScriptedClient(ScriptedBackend())
        a = open_session(five_layer_graph, client, n_items=10, seed=11)
        b = open_session(five_layer_graph, client, n_items=10, seed=11)
        assert [i.node_id for i in a.items] == [i.node_id for i in b.items]
        assert a.graph_version_pre == five_layer_graph.snapshot_version
        node_ids = [i.node_id for i in a.items]
        assert len(node_ids) == len(set(node_ids))  # distinct nodes

    def test_all_nodes_when_small(self, five_layer_graph):
        client = ScriptedClient(ScriptedBackend())
        session = open_session(five_layer_graph, client, n_items=18, seed=1)
        assert len(session.items) == 15  # 8 + 4 + 2 + 1 synthesized nodes

    def test_requires_full_build(self, five_layer_graph):
        ingested = five_layer_graph.with_phase_state("ingested")
        with pytest.raises(PreconditionError):
            open_session(ingested, ScriptedClient(ScriptedBackend()), seed=1)

    def test_round_trip_serialization(self, five_layer_graph):
        session = open_session(five_layer_graph, ScriptedClient(ScriptedBackend()), n_items=6, seed=2)
        doc = session_to_doc(session)
        restored = session_from_doc(json.loads(json.dumps(doc)))
        assert session_to_doc(restored) == doc


class TestApplyFeedback:
    def _session(self, graph):
        return open_session(graph, ScriptedClient(ScriptedBackend()), n_items=6, seed=3)

    def test_only_content_and_revisions_change(self, five_layer_graph):
        session = self._session(five_layer_graph)
        item = session.items[0]
        before = five_layer_graph.node(item.node_id)
        updated, record = apply_feedback(
            five_layer_graph, session, item.id,
            "Mostly right, and I would add that mornings matter most.",
            ScriptedClient(ScriptedBackend()), "2026-01-01T00:00:05+00:00",
        )
        after = updated.node(item.node_id)
        assert after.content != before.content
        assert len(after.revisions) == len(before.revisions) + 1
        assert after.revisions[-1].prior_content == before.content
        assert (after.id, after.layer, after.source_ids, after.dimension_id) == (
            before.id, before.layer, before.source_ids, before.dimension_id,
        )
        assert item.status == "answered"
        assert record.word_count == 10
        assert updated.snapshot_version == five_layer_graph.snapshot_version + 1

    def test_two_word_answer_processed(self, five_layer_graph):
        session = self._session(five_layer_graph)
        item = session.items[0]
        updated, record = apply_feedback(
            five_layer_graph, session, item.id, "Provides focus.",
            ScriptedClient(ScriptedBackend()), "ts",
        )
        assert record.word_count == 2
        assert record.t_unit_count == 1
        assert updated.node(item.node_id).revisions

    def test_empty_answer_rejected(self, five_layer_graph):
        session = self._session(five_layer_graph)
        with pytest.raises(PreconditionError):
            apply_feedback(five_layer_graph, session, session.items[0].id, "  ",
                           ScriptedClient(ScriptedBackend()), "ts")

    def test_skip_leaves_node_untouched(self, five_layer_graph):
        session = self._session(five_layer_graph)
        item = session.items[1]
        before = five_layer_graph.node(item.node_id)
        skip_item(session, item.id)
        assert item.status == "skipped"
        assert five_layer_graph.node(item.node_id) == before
        with pytest.raises(PreconditionError, match="already skipped"):
            skip_item(session, item.id)

    def test_counts_recomputed_not_client_supplied(self, five_layer_graph):
        session = self._session(five_layer_graph)
        answer = "I plan ahead, and I relax later."
        _, record = apply_feedback(
            five_layer_graph, session, session.items[0].id, answer,
            ScriptedClient(ScriptedBackend()), "ts",
        )
        assert record.word_count == word_count(answer)
        assert record.t_unit_count == count_t_units(answer)

    def test_report_shape(self, five_layer_graph):
        session = self._session(five_layer_graph)
        apply_feedback(five_layer_graph, session, session.items[0].id, "Yes.",
                       ScriptedClient(ScriptedBackend()), "ts")
        skip_item(session, session.items[1].id)
        report = session_report(session)
        assert report["counts"]["answered"] == 1
        assert report["counts"]["skipped"] == 1
        assert report["feedback_stats"]["n"] == 1
        assert report["version_pre"] == session.graph_version_pre


class TestTUnits:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("Rest feels earned.", 1),
            ("", 0),
            ("I plan ahead, and I relax later.", 2),
            ("Play badminton with friends.", 1),
            ("It worked; the fix held.", 2),
            ("First I read the trace, but then I gave up, so I asked for help.", 3),
            ("One. Two. Three.", 3),
        ],
    )
    def test_examples(self, text, expected):
        assert count_t_units(text) == expected

    def test_nonempty_always_at_least_one(self):
        assert count_t_units("so") == 1

    def test_word_count_is_whitespace_tokens(self):
        assert word_count("a b  c\nd") == 4
        assert word_count("") == 0
