"""Consensus scoring against brute-force oracles, plus clustering behavior."""

from __future__ import annotations

import datetime as dt
import json
import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layermind.config import ATTRIBUTES, ConsensusConfig
from layermind.consensus import (
    NOISE,
    AttributeAssignment,
    base_cluster,
    build_consensus,
    consensus_csv,
    form_clusters,
    synthesize_l1,
)
from layermind.embedding import HashingEmbedder
from layermind.errors import PreconditionError
from layermind.llm import CORRECTIVE_LINE
from tests.conftest import SequenceClient, _inst


def assignments_from(labels_by_attr: dict[str, dict[str, int]]):
    return [AttributeAssignment(attr, labels_by_attr[attr]) for attr in ATTRIBUTES]


def brute_force(labels_by_attr, dates, config):
    """Direct per-pair evaluation of the weighted score and penalty."""
    ids = sorted(dates)
    n = len(ids)
    R = [[0] * n for _ in range(n)]
    P = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            score = 0
            for attr in ATTRIBUTES:
                la = labels_by_attr[attr][ids[i]]
                lb = labels_by_attr[attr][ids[j]]
                if la == lb and la != NOISE:
                    score += config.weights[attr]
            R[i][j] = score
            P[i][j] = config.same_date_penalty if dates[ids[i]] == dates[ids[j]] else 0
    S = [[R[i][j] - P[i][j] for j in range(n)] for i in range(n)]
    return R, P, S


def random_case(rng: random.Random, max_n=12):
    n = rng.randint(2, max_n)
    ids = [f"x{i}" for i in range(n)]
    labels_by_attr = {
        attr: {i: rng.choice([NOISE, 0, 1, 2, 3]) for i in ids} for attr in ATTRIBUTES
    }
    dates = {i: dt.date(2025, 9, rng.randint(1, 5)) for i in ids}
    return labels_by_attr, dates


class TestBuildConsensus:
    def test_all_six_agree_different_dates(self):
        ids = ["a", "b"]
        labels = {attr: {"a": 0, "b": 0} for attr in ATTRIBUTES}
        dates = {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 2)}
        m = build_consensus(assignments_from(labels), dates, ConsensusConfig())
        i, j = m.index_of("a"), m.index_of("b")
        assert (m.R[i, j], m.P[i, j], m.S[i, j]) == (7, 0, 7)

    def test_what_when_only_same_date(self):
        labels = {attr: {"a": 0, "b": 1} for attr in ATTRIBUTES}
        labels["what"] = {"a": 0, "b": 0}
        labels["when"] = {"a": 0, "b": 0}
        dates = {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 1)}
        m = build_consensus(assignments_from(labels), dates, ConsensusConfig())
        i, j = m.index_of("a"), m.index_of("b")
        assert (m.R[i, j], m.P[i, j], m.S[i, j]) == (3, 2, 1)

    def test_noise_never_matches_noise(self):
        labels = {attr: {"a": 0, "b": 1} for attr in ATTRIBUTES}
        labels["who"] = {"a": NOISE, "b": NOISE}
        for same_date in (True, False):
            dates = {
                "a": dt.date(2025, 9, 1),
                "b": dt.date(2025, 9, 1 if same_date else 2),
            }
            m = build_consensus(assignments_from(labels), dates, ConsensusConfig())
            i, j = m.index_of("a"), m.index_of("b")
            assert m.R[i, j] == 0
            assert m.S[i, j] in (0, -2)

    def test_matches_brute_force_on_random_cases(self):
        rng = random.Random(101)
        config = ConsensusConfig()
        for _ in range(50):
            labels_by_attr, dates = random_case(rng)
            m = build_consensus(assignments_from(labels_by_attr), dates, config)
            R, P, S = brute_force(labels_by_attr, dates, config)
            assert m.R.tolist() == R
            assert m.P.tolist() == P
            assert m.S.tolist() == S

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force_property(self, data):
        n = data.draw(st.integers(min_value=2, max_value=12))
        ids = [f"x{i}" for i in range(n)]
        labels_by_attr = {
            attr: {
                i: data.draw(st.sampled_from([NOISE, 0, 1, 2]), label=f"{attr}:{i}")
                for i in ids
            }
            for attr in ATTRIBUTES
        }
        dates = {
            i: dt.date(2025, 9, data.draw(st.integers(1, 4), label=f"date:{i}")) for i in ids
        }
        config = ConsensusConfig()
        m = build_consensus(assignments_from(labels_by_attr), dates, config)
        R, P, S = brute_force(labels_by_attr, dates, config)
        assert m.R.tolist() == R and m.P.tolist() == P and m.S.tolist() == S

    def test_symmetry_and_bounds(self):
        rng = random.Random(7)
        config = ConsensusConfig()
        for _ in range(25):
            labels_by_attr, dates = random_case(rng)
            m = build_consensus(assignments_from(labels_by_attr), dates, config)
            assert np.array_equal(m.S, m.S.T)
            assert np.array_equal(m.R, m.R.T)
            off = ~np.eye(len(m.instance_ids), dtype=bool)
            assert m.R[off].min() >= 0 and m.R[off].max() <= 7
            assert set(np.unique(m.P[off])) <= {0, 2}
            assert m.S[off].min() >= -2 and m.S[off].max() <= 7

    def test_missing_attribute_named(self):
        labels = {attr: {"a": 0, "b": 0} for attr in ATTRIBUTES}
        partial = assignments_from(labels)[:5]
        with pytest.raises(PreconditionError, match="missing attribute"):
            build_consensus(partial, {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 2)}, ConsensusConfig())

    def test_uncovered_instance_named(self):
        labels = {attr: {"a": 0} for attr in ATTRIBUTES}
        with pytest.raises(PreconditionError, match="when|what|where|who|why|how"):
            build_consensus(
                assignments_from(labels),
                {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 2)},
                ConsensusConfig(),
            )


class TestFormClusters:
    def _matrix(self, ids, s_entries, dates=None):
        """Build a ConsensusMatrix with given S entries (symmetric)."""
        from layermind.consensus import ConsensusMatrix

        n = len(ids)
        S = np.zeros((n, n), dtype=np.int64)
        for (a, b), v in s_entries.items():
            i, j = ids.index(a), ids.index(b)
            S[i, j] = S[j, i] = v
        dates = dates or {x: dt.date(2025, 9, k + 1) for k, x in enumerate(ids)}
        return ConsensusMatrix(tuple(ids), np.abs(S), np.zeros_like(S), S, dates)

    def test_transitive_closure_merges(self):
        m = self._matrix(["a", "b", "c"], {("a", "b"): 5, ("b", "c"): 4, ("a", "c"): 1})
        cs = form_clusters(m, ConsensusConfig())
        assert cs.clusters == (("a", "b", "c"),)
        assert cs.unclustered == ()

    def test_all_below_threshold(self):
        m = self._matrix(["a", "b", "c"], {("a", "b"): 3, ("b", "c"): 2})
        cs = form_clusters(m, ConsensusConfig())
        assert cs.clusters == ()
        assert set(cs.unclustered) == {"a", "b", "c"}

    def test_two_disjoint_pairs(self):
        m = self._matrix(["a", "b", "c", "d"], {("a", "b"): 6, ("c", "d"): 4})
        cs = form_clusters(m, ConsensusConfig())
        assert len(cs.clusters) == 2
        assert all(len(c) == 2 for c in cs.clusters)

    def test_clusters_ordered_by_earliest_date(self):
        dates = {"a": dt.date(2025, 9, 9), "b": dt.date(2025, 9, 8),
                 "c": dt.date(2025, 9, 1), "d": dt.date(2025, 9, 2)}
        m = self._matrix(["a", "b", "c", "d"], {("a", "b"): 6, ("c", "d"): 5}, dates)
        cs = form_clusters(m, ConsensusConfig())
        assert cs.clusters[0] == ("c", "d")
        assert cs.clusters[1] == ("b", "a")  # members date-ordered too

    def test_empty_input(self):
        from layermind.consensus import ConsensusMatrix

        empty = ConsensusMatrix((), np.zeros((0, 0), int), np.zeros((0, 0), int), np.zeros((0, 0), int), {})
        cs = form_clusters(empty, ConsensusConfig())
        assert cs.clusters == () and cs.unclustered == ()

    def test_same_date_pairs_need_raw_score_tau_plus_penalty(self):
        # the inter-day bias at edge level: same-date pairs connect only at R >= tau + 2
        for raw, connected in ((5, False), (6, True)):
            labels = {attr: {"a": 0, "b": 0} for attr in ATTRIBUTES}
            if raw == 5:
                labels["why"] = {"a": 0, "b": 1}
                labels["how"] = {"a": 0, "b": 1}
            else:
                labels["why"] = {"a": 0, "b": 1}
            dates = {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 1)}
            m = build_consensus(assignments_from(labels), dates, ConsensusConfig())
            assert int(m.R[m.index_of("a"), m.index_of("b")]) == raw
            cs = form_clusters(m, ConsensusConfig())
            assert bool(cs.clusters) == connected

    def test_matches_networkx_components(self):
        rng = random.Random(23)
        config = ConsensusConfig()
        for _ in range(40):
            labels_by_attr, dates = random_case(rng)
            m = build_consensus(assignments_from(labels_by_attr), dates, config)
            cs = form_clusters(m, config)
            g = nx.Graph()
            g.add_nodes_from(m.instance_ids)
            n = len(m.instance_ids)
            for i in range(n):
                for j in range(i + 1, n):
                    if m.S[i, j] >= config.tau:
                        g.add_edge(m.instance_ids[i], m.instance_ids[j])
            expected = {frozenset(c) for c in nx.connected_components(g) if len(c) >= 2}
            assert {frozenset(c) for c in cs.clusters} == expected
            singles = {next(iter(c)) for c in nx.connected_components(g) if len(c) == 1}
            assert set(cs.unclustered) == singles

    def test_raising_tau_refines(self):
        rng = random.Random(5)
        for _ in range(20):
            labels_by_attr, dates = random_case(rng)
            m = build_consensus(assignments_from(labels_by_attr), dates, ConsensusConfig())
            previous = None
            for tau in range(1, 8):
                cs = form_clusters(m, ConsensusConfig(tau=tau))
                mapping = {}
                for k, cluster in enumerate(cs.clusters):
                    for member in cluster:
                        mapping[member] = k
                if previous is not None:
                    # every cluster at tau must sit inside one cluster at tau-1
                    for cluster in cs.clusters:
                        parents = {previous.get(member) for member in cluster}
                        assert len(parents) == 1 and None not in parents
                previous = mapping


class TestBaseCluster:
    def test_identical_texts_share_label(self):
        instances = [
            _inst("i1", dt.date(2025, 9, 1), where="Home"),
            _inst("i2", dt.date(2025, 9, 2), where="Home"),
            _inst("i3", dt.date(2025, 9, 3), where="Home"),
            _inst("i4", dt.date(2025, 9, 4), where="the gym downtown"),
            _inst("i5", dt.date(2025, 9, 5), where="a quiet library corner"),
            _inst("i6", dt.date(2025, 9, 6), where="grandmother's kitchen table"),
        ]
        assignment = base_cluster(instances, "where", ConsensusConfig(), HashingEmbedder())
        labels = assignment.labels
        assert labels["i1"] == labels["i2"] == labels["i3"] != NOISE

    def test_all_identical_single_label(self):
        instances = [_inst(f"i{k}", dt.date(2025, 9, k + 1), who="") for k in range(5)]
        assignment = base_cluster(instances, "who", ConsensusConfig(), HashingEmbedder())
        assert set(assignment.labels.values()) == {0}

    def test_two_instances_deterministic(self):
        instances = [
            _inst("i1", dt.date(2025, 9, 1), what="alpha beta"),
            _inst("i2", dt.date(2025, 9, 2), what="gamma delta"),
        ]
        a = base_cluster(instances, "what", ConsensusConfig(), HashingEmbedder())
        b = base_cluster(instances, "what", ConsensusConfig(), HashingEmbedder())
        assert a.labels == b.labels
        assert set(a.labels.values()) <= {NOISE, 0}

    def test_fewer_than_two_instances_rejected(self):
        with pytest.raises(PreconditionError):
            base_cluster([_inst("i1", dt.date(2025, 9, 1))], "what", ConsensusConfig(), HashingEmbedder())

    def test_unknown_attribute(self):
        with pytest.raises(PreconditionError):
            base_cluster(
                [_inst("i1", dt.date(2025, 9, 1)), _inst("i2", dt.date(2025, 9, 2))],
                "whence", ConsensusConfig(), HashingEmbedder(),
            )


def io_response(patterns):
    return json.dumps(patterns)


class TestSynthesizeL1:
    def _cluster(self, n=3):
        return [_inst(f"c{k}", dt.date(2025, 9, k + 1), what="studied late") for k in range(n)]

    def _make_id_factory(self):
        counter = [0]

        def make_id():
            counter[0] += 1
            return f"L1_{counter[0]:04d}"

        return make_id

    def test_single_pattern_citing_all(self):
        cluster = self._cluster(3)
        client = SequenceClient([io_response([
            {"title": "Consistent Nighttime Academic Productivity",
             "content": "Recurring late-evening academic work.",
             "source_instances": ["c0", "c1", "c2"]},
        ])])
        nodes = synthesize_l1(cluster, client, self._make_id_factory())
        assert len(nodes) == 1
        assert nodes[0].title == "Consistent Nighttime Academic Productivity"
        assert set(nodes[0].source_ids) == {"c0", "c1", "c2"}

    def test_three_patterns_partitioning_cluster(self):
        cluster = self._cluster(6)
        client = SequenceClient([io_response([
            {"title": "Aa Bb Cc", "content": "x", "source_instances": ["c0", "c1"]},
            {"title": "Dd Ee Ff", "content": "y", "source_instances": ["c2", "c3"]},
            {"title": "Gg Hh Ii", "content": "z", "source_instances": ["c4", "c5"]},
        ])])
        nodes = synthesize_l1(cluster, client, self._make_id_factory())
        union = {s for n in nodes for s in n.source_ids}
        assert len(nodes) == 3
        assert union == {f"c{k}" for k in range(6)}

    def test_fourth_pattern_dropped(self, caplog):
        cluster = self._cluster(4)
        payload = [
            {"title": f"Pattern Number {k}", "content": "x", "source_instances": [f"c{k}"]}
            for k in range(4)
        ]
        client = SequenceClient([io_response(payload)])
        with caplog.at_level("WARNING"):
            nodes = synthesize_l1(cluster, client, self._make_id_factory())
        assert len(nodes) == 3
        assert "keeping first 3" in caplog.text

    def test_outside_sources_dropped(self):
        cluster = self._cluster(2)
        client = SequenceClient([io_response([
            {"title": "Okay Pattern Here", "content": "x", "source_instances": ["c0", "c1"]},
            {"title": "Bad Pattern Here", "content": "x", "source_instances": ["zz"]},
        ])])
        nodes = synthesize_l1(cluster, client, self._make_id_factory())
        assert [n.title for n in nodes] == ["Okay Pattern Here"]

    def test_invalid_json_reask_then_fail(self):
        from layermind.errors import LlmFormatError

        cluster = self._cluster(2)
        client = SequenceClient(["nope", "still nope"])
        with pytest.raises(LlmFormatError):
            synthesize_l1(cluster, client, self._make_id_factory())
        assert CORRECTIVE_LINE in client.prompts[1]

    def test_cluster_too_small(self):
        with pytest.raises(PreconditionError):
            synthesize_l1(self._cluster(1), SequenceClient([]), self._make_id_factory())


def test_csv_dump_has_three_sections():
    labels = {attr: {"a": 0, "b": 0} for attr in ATTRIBUTES}
    m = build_consensus(
        assignments_from(labels),
        {"a": dt.date(2025, 9, 1), "b": dt.date(2025, 9, 2)},
        ConsensusConfig(),
    )
    dump = consensus_csv(m)
    assert dump.count("# R") == 1 and dump.count("# P") == 1 and dump.count("# S") == 1
    assert "id,a,b" in dump
