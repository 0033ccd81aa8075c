"""Run orchestration: phases, per-user artifacts, and run reports.

Phase order is enforced: extract -> phase1 -> phase2 -> evaluate_pre -> hitl
-> evaluate_post. Each phase persists one or more graph snapshots plus a
machine-readable run report (counts, dropped items, LLM call count, prompt
manifest fingerprint). All artifacts live under the per-user directory of the
configured data dir.
"""

from __future__ import annotations

import datetime as dt
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from layermind import hitl as hitl_ops
from layermind.abstraction import build_higher_layers, dimensions_export
from layermind.clock import LogicalClock, SystemClock
from layermind.config import PipelineConfig
from layermind.consensus import (
    base_cluster_all,
    build_consensus,
    consensus_csv,
    form_clusters,
    synthesize_l1,
)
from layermind.embedding import make_provider
from layermind.errors import (
    LlmError,
    LlmFormatError,
    NotFoundError,
    PhaseOrderError,
    PreconditionError,
)
from layermind.evaluation import (
    LikertLog,
    QaItem,
    answer_from_ptm,
    atomic_match,
    build_report,
    generate_testset,
    jaccard_overlap,
    layer_semantics,
    paired_t,
    pearson_r,
    summarize_likert,
    vocabulary,
    write_report_csvs,
)
from layermind.graph.model import LayerTag, LayeredGraph, next_node_id
from layermind.graph.store import GraphStore, atomic_write_json, export_document, read_json
from layermind.ingestion import Corpus, corpus_to_jsonl, extract_corpus, ingest_jsonl
from layermind.llm import (
    LiveLlmClient,
    LlmClient,
    RecordingLlmClient,
    ReplayLlmClient,
    ScriptedClient,
)
from layermind.prompts import default_registry
from layermind.scripted import ScriptedBackend

logger = logging.getLogger(__name__)

PHASES = ("extract", "phase1", "phase2", "evaluate_pre", "hitl", "evaluate_post")


def build_client(config: PipelineConfig) -> LlmClient:
    llm = config.llm
    if llm.mode == "replay":
        return ReplayLlmClient(llm.fixture_dir)
    if llm.backend == "http":
        live: LlmClient = LiveLlmClient(llm.endpoint, llm.model_name, llm.api_key)
    else:
        live = ScriptedClient(ScriptedBackend())
    if llm.mode == "record":
        return RecordingLlmClient(live, llm.fixture_dir)
    return live


class Pipeline:
    """Binds config, store, clients, and clock; executes phases for users."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.store = GraphStore(config.data_dir)
        self.client = build_client(config)
        self.provider = make_provider(config.embedding.provider, config.embedding.dim)
        self.clock = SystemClock() if config.llm.mode == "live" else LogicalClock()
        self.registry = default_registry()

    # ------------------------------------------------------------------
    # Per-user paths
    # ------------------------------------------------------------------

    def user_dir(self, user_id: str) -> Path:
        return self.store.user_dir(user_id)

    def _entries_path(self, user_id: str) -> Path:
        return self.user_dir(user_id) / "entries.jsonl"

    def _testset_path(self, user_id: str) -> Path:
        return self.user_dir(user_id) / "testset.json"

    def _session_path(self, user_id: str) -> Path:
        return self.user_dir(user_id) / "session.json"

    def likert_log(self, user_id: str) -> LikertLog:
        return LikertLog(self.user_dir(user_id) / "likert.jsonl")

    def _eval_path(self, user_id: str, condition: str) -> Path:
        return self.user_dir(user_id) / "eval" / f"{condition}.json"

    # ------------------------------------------------------------------
    # Ingestion
    # ------------------------------------------------------------------

    def ingest_journals(self, user_id: str, jsonl_payload: str) -> dict:
        corpus = ingest_jsonl(user_id, jsonl_payload)
        path = self._entries_path(user_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(corpus_to_jsonl(corpus), encoding="utf-8")
        atomic_write_json(
            self.user_dir(user_id) / "rejections.json",
            {"rejections": [{"entry_id": r.entry_id, "reason": r.reason} for r in corpus.rejections]},
        )
        return {
            "user_id": user_id,
            "accepted": len(corpus.entries),
            "rejected": [{"entry_id": r.entry_id, "reason": r.reason} for r in corpus.rejections],
        }

    def load_corpus(self, user_id: str) -> Corpus:
        path = self._entries_path(user_id)
        if not path.is_file():
            raise NotFoundError(f"user {user_id!r} has no ingested journals")
        return ingest_jsonl(user_id, path.read_text(encoding="utf-8"))

    # ------------------------------------------------------------------
    # Phase driver
    # ------------------------------------------------------------------

    def run_phase(self, user_id: str, phase: str) -> dict:
        if phase not in PHASES:
            raise PreconditionError(f"unknown phase: {phase!r}; expected one of {PHASES}")
        started = time.monotonic()
        calls_before = self.client.calls
        runner = getattr(self, f"_phase_{phase}")
        detail = runner(user_id)
        report = {
            "user_id": user_id,
            "phase": phase,
            "status": "done",
            "duration_s": round(time.monotonic() - started, 3),
            "llm_calls": self.client.calls - calls_before,
            "prompt_manifest_hash": self.registry.manifest_hash,
            **detail,
        }
        runs_dir = self.user_dir(user_id) / "runs"
        run_id = f"{phase}-{len(list(runs_dir.glob('*.json'))) + 1:03d}" if runs_dir.is_dir() else f"{phase}-001"
        report["run_id"] = run_id
        atomic_write_json(runs_dir / f"{run_id}.json", report)
        return report

    def _graph_or_order_error(self, user_id: str, phase: str, accepted_states: tuple[str, ...], missing: str) -> LayeredGraph:
        try:
            graph = self.store.load(user_id)
        except NotFoundError:
            raise PhaseOrderError(phase, missing) from None
        if graph.phase_state not in accepted_states:
            raise PhaseOrderError(phase, missing)
        return graph

    # ------------------------------------------------------------------
    # Phases
    # ------------------------------------------------------------------

    def _phase_extract(self, user_id: str) -> dict:
        corpus = self.load_corpus(user_id)
        if self.store.exists(user_id):
            raise PreconditionError(f"user {user_id!r} already has extracted snapshots")
        instances, failures = extract_corpus(corpus, self.client, self.config.llm.max_inflight)
        graph = LayeredGraph(user_id=user_id).put_nodes(instances, phase_state="ingested")
        self.store.save(graph, self.clock.now_iso())
        return {
            "entries": len(corpus.entries),
            "instances": len(instances),
            "extraction_failures": [{"entry_id": f.entry_id, "reason": f.reason} for f in failures],
            "snapshot_version": graph.snapshot_version,
        }

    def _phase_phase1(self, user_id: str) -> dict:
        graph = self._graph_or_order_error(user_id, "phase1", ("ingested",), "extract")
        instances = [n for n in graph.layer_nodes(LayerTag.L0)]
        assignments = base_cluster_all(instances, self.config.consensus, self.provider)
        dates = {i.id: i.date for i in instances}
        matrix = build_consensus(assignments, dates, self.config.consensus)
        (self.user_dir(user_id) / "consensus.csv").write_text(
            consensus_csv(matrix), encoding="utf-8"
        )
        cluster_set = form_clusters(matrix, self.config.consensus)
        by_id = {i.id: i for i in instances}
        nodes = []
        counter = [0]

        def make_id() -> str:
            node_id = next_node_id(graph, LayerTag.L1, offset=counter[0])
            counter[0] += 1
            return node_id

        for cluster in cluster_set.clusters:
            nodes.extend(synthesize_l1([by_id[i] for i in cluster], self.client, make_id))
        graph = graph.put_nodes(nodes, phase_state="l1_built")
        self.store.save(graph, self.clock.now_iso())
        return {
            "clusters": len(cluster_set.clusters),
            "unclustered": len(cluster_set.unclustered),
            "l1_nodes": len(nodes),
            "snapshot_version": graph.snapshot_version,
        }

    def _phase_phase2(self, user_id: str) -> dict:
        graph = self._graph_or_order_error(user_id, "phase2", ("l1_built",), "phase1")
        graph = build_higher_layers(
            graph,
            self.config.abstraction,
            self.client,
            on_layer=lambda g: self.store.save(g, self.clock.now_iso()),
        )
        atomic_write_json(
            self.user_dir(user_id) / "dimensions.json",
            dimensions_export(list(graph.dimensions.values())),
        )
        sizes = graph.layer_sizes()
        return {
            "layer_counts": {tag.name: sizes[tag] for tag in LayerTag},
            "dimensions": len(graph.dimensions),
            "snapshot_version": graph.snapshot_version,
        }

    def _phase_evaluate_pre(self, user_id: str) -> dict:
        self._graph_or_order_error(user_id, "evaluate_pre", ("full_built",), "phase2")
        return self._evaluate(user_id, "pre")

    def _phase_hitl(self, user_id: str) -> dict:
        graph = self._graph_or_order_error(user_id, "hitl", ("full_built",), "phase2")
        if not self._eval_path(user_id, "pre").is_file():
            raise PhaseOrderError("hitl", "evaluate_pre")
        session = hitl_ops.open_session(
            graph, self.client, n_items=self.config.hitl.session_size, seed=self.config.seed
        )
        atomic_write_json(self._session_path(user_id), hitl_ops.session_to_doc(session))
        return {
            "session_id": session.session_id,
            "items": len(session.items),
            "allocation": {
                layer.name: sum(1 for i in session.items if i.layer == layer)
                for layer in hitl_ops.SESSION_LAYERS
            },
            "version_pre": session.graph_version_pre,
        }

    def _phase_evaluate_post(self, user_id: str) -> dict:
        self._graph_or_order_error(user_id, "evaluate_post", ("refined",), "hitl")
        return self._evaluate(user_id, "post")

    # ------------------------------------------------------------------
    # HITL interaction (service/CLI surface)
    # ------------------------------------------------------------------

    def load_session(self, user_id: str) -> hitl_ops.HitlSession:
        path = self._session_path(user_id)
        if not path.is_file():
            raise NotFoundError(f"user {user_id!r} has no open review session")
        return hitl_ops.session_from_doc(read_json(path))

    def answer_item(self, user_id: str, item_id: str, answer: str) -> dict:
        session = self.load_session(user_id)
        graph = self.store.load(user_id)
        item = next((i for i in session.items if i.id == item_id), None)
        if item is None:
            raise NotFoundError(f"unknown session item: {item_id!r}")
        before = graph.node(item.node_id).content
        # the closing answer flips the graph to refined on the same snapshot
        closes_session = [p.id for p in session.pending()] == [item_id]
        new_graph, record = hitl_ops.apply_feedback(
            graph,
            session,
            item_id,
            answer,
            self.client,
            self.clock.now_iso(),
            phase_state="refined" if closes_session else None,
        )
        self.store.save(new_graph, self.clock.now_iso())
        if closes_session:
            session.graph_version_post = new_graph.snapshot_version
        atomic_write_json(self._session_path(user_id), hitl_ops.session_to_doc(session))
        node = new_graph.node(item.node_id)
        return {
            "item_id": item_id,
            "node_id": item.node_id,
            "status": "answered",
            "content_before": before,
            "content_after": node.content,
            "revision_count": len(node.revisions),
            "word_count": record.word_count,
            "t_unit_count": record.t_unit_count,
            "session": session.counts(),
            "complete": session.complete(),
        }

    def skip_session_item(self, user_id: str, item_id: str) -> dict:
        session = self.load_session(user_id)
        hitl_ops.skip_item(session, item_id)
        if session.complete() and session.graph_version_post is None:
            graph = self.store.load(user_id).with_phase_state("refined")
            self.store.save(graph, self.clock.now_iso())
            session.graph_version_post = graph.snapshot_version
        atomic_write_json(self._session_path(user_id), hitl_ops.session_to_doc(session))
        return {"item_id": item_id, "status": "skipped", "session": session.counts(), "complete": session.complete()}

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def _load_or_generate_testset(self, user_id: str, corpus: Corpus) -> list[QaItem]:
        path = self._testset_path(user_id)
        if path.is_file():
            return [QaItem.from_dict(d) for d in read_json(path)["items"]]
        dates = sorted({e.date for e in corpus.entries})
        rng = random.Random(self.config.seed)
        start = rng.choice(dates)
        window = (start, start + dt.timedelta(days=self.config.eval.window_days - 1))
        items = generate_testset(
            corpus.entries, window, self.client, self.config.eval.testset_size
        )
        atomic_write_json(path, {"items": [i.as_dict() for i in items]})
        return items

    def _evaluate(self, user_id: str, condition: str) -> dict:
        graph = self.store.load(user_id)
        corpus = self.load_corpus(user_id)
        items = self._load_or_generate_testset(user_id, corpus)
        num_target = self.config.eval.num_target_labels

        def answer_one(item: QaItem):
            try:
                return answer_from_ptm(item.query, graph, num_target, self.client)
            except LlmError as exc:
                logger.warning("item %s unanswered: %s", item.id, exc)
                return None

        with ThreadPoolExecutor(max_workers=max(1, self.config.llm.max_inflight)) as pool:
            predictions = list(pool.map(answer_one, items))
        reports = []
        unanswered = 0
        unevaluated = 0
        for item, prediction in zip(items, predictions):
            if not prediction:
                unanswered += 1
                continue
            try:
                reports.append(
                    atomic_match(
                        item.query,
                        prediction,
                        item.ground_truth,
                        self.client,
                        item_id=item.id,
                        layer=item.target_layer_hint.name if item.target_layer_hint else None,
                        user_id=user_id,
                    )
                )
            except LlmFormatError as exc:
                logger.warning("item %s unevaluated: %s", item.id, exc)
                unevaluated += 1
        journal_vocab = vocabulary(e.text for e in corpus.entries)
        semantics = []
        jaccard = {}
        for layer in (LayerTag.L1, LayerTag.L2, LayerTag.L3, LayerTag.L4):
            nodes = graph.layer_nodes(layer)
            semantics.append(
                layer_semantics(
                    layer,
                    [n.content for n in nodes],
                    self.provider,
                    reduce_dim=self.config.consensus.reduce_dim,
                    min_cluster_size=self.config.consensus.min_cluster_size,
                    seed=self.config.seed,
                )
            )
            node_vocab = vocabulary(f"{n.title} {n.content}" for n in nodes)
            jaccard[layer.name] = round(jaccard_overlap(node_vocab, journal_vocab), 6)
        likert_records = self.likert_log(user_id).records()
        likert = None
        if likert_records:
            node_layers = {
                n.id: n.layer.name for n in graph.nodes.values() if n.layer != LayerTag.L0
            }
            likert = summarize_likert(likert_records, node_layers)
        t_tests = self._t_tests(user_id, condition, reports)
        correlations = self._correlations(user_id, condition, likert_records, graph)
        report = build_report(
            condition,
            reports,
            unanswered=unanswered,
            unevaluated=unevaluated,
            semantics=semantics,
            jaccard_by_layer=jaccard,
            likert=likert,
            correlations=correlations,
            t_tests=t_tests,
        )
        atomic_write_json(self._eval_path(user_id, condition), report)
        write_report_csvs(report, self.user_dir(user_id) / "eval" / "csv")
        return {
            "condition": condition,
            "items": len(items),
            "evaluated": len(reports),
            "unanswered": unanswered,
            "unevaluated": unevaluated,
            "overall": report["overall"],
        }

    def _t_tests(self, user_id: str, condition: str, reports) -> dict:
        """Pre-vs-post paired t over per-item f1 once both conditions exist."""
        if condition != "post" or not self._eval_path(user_id, "pre").is_file():
            return {}
        from layermind.evaluation.metrics import precision_recall_f1

        pre_doc = read_json(self._eval_path(user_id, "pre"))
        pre_items = pre_doc.get("items", {})
        pairs = []
        for report in reports:
            pre = pre_items.get(report.item_id)
            if pre is None:
                continue
            pre_f1 = precision_recall_f1(pre["tp"], pre["fp"], pre["fn"])[2]
            post_f1 = precision_recall_f1(report.tp, report.fp, report.fn)[2]
            pairs.append((pre_f1, post_f1))
        if len(pairs) < 2:
            return {}
        result = paired_t([a for a, _ in pairs], [b for _, b in pairs])
        return {"per_item_f1_pre_vs_post": result.as_dict()}

    def _correlations(self, user_id: str, condition: str, likert_records, graph) -> dict:
        """Feedback size vs. rating-delta correlations, when the data exists."""
        if condition != "post":
            return {}
        try:
            session = self.load_session(user_id)
        except NotFoundError:
            return {}
        pre_ratings = {r.node_id: r.rating for r in likert_records if r.phase == "pre_hitl"}
        post_ratings = {r.node_id: r.rating for r in likert_records if r.phase == "post_hitl"}
        items_by_id = {i.id: i for i in session.items}
        words, t_units, deltas = [], [], []
        for record in session.feedback:
            item = items_by_id.get(record.item_id)
            if item is None:
                continue
            if item.node_id in pre_ratings and item.node_id in post_ratings:
                words.append(float(record.word_count))
                t_units.append(float(record.t_unit_count))
                deltas.append(float(post_ratings[item.node_id] - pre_ratings[item.node_id]))
        if len(deltas) < 3:
            return {}
        return {
            "word_count_vs_delta_rating": pearson_r(words, deltas).as_dict(),
            "t_unit_count_vs_delta_rating": pearson_r(t_units, deltas).as_dict(),
        }

    # ------------------------------------------------------------------
    # Exports
    # ------------------------------------------------------------------

    def export_graph(self, user_id: str, version: int | None = None) -> dict:
        graph = self.store.load(user_id, version)
        snap_doc = read_json(
            self.store.user_dir(user_id) / "snapshots" / f"v{graph.snapshot_version:05d}.json"
        )
        return export_document(graph, generated_at=snap_doc["created_at"])

    def export_report(self, user_id: str, condition: str) -> dict:
        path = self._eval_path(user_id, condition)
        if not path.is_file():
            raise NotFoundError(f"user {user_id!r} has no {condition!r} evaluation report")
        return read_json(path)

