"""Shared fixtures: recorded replay set, completed pipeline run, stub clients."""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import pytest

from layermind.config import PipelineConfig
from layermind.fixtures import record_fixtures, replay_config, run_complete_pipeline
from layermind.graph.model import (
    AnalyticalDimension,
    BehavioralInstance,
    LayerTag,
    LayeredGraph,
    PatternNode,
)
from layermind.llm import LlmClient
from layermind.pipeline import Pipeline


class SequenceClient(LlmClient):
    """Returns canned responses in order; for format/error-path tests."""

    mode = "live"

    def __init__(self, responses: list[str]):
        super().__init__()
        self.responses = list(responses)
        self.prompts: list[str] = []

    def _respond(self, request, rendered: str) -> str:
        self.prompts.append(rendered)
        if not self.responses:
            raise AssertionError("SequenceClient exhausted")
        return self.responses.pop(0)


@pytest.fixture
def sequence_client():
    return SequenceClient


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    """Record the full pipeline's LLM traffic once per test session."""
    fx = tmp_path_factory.mktemp("fixtures")
    data = tmp_path_factory.mktemp("record-data")
    record_fixtures(fx, data)
    return fx


@pytest.fixture(scope="session")
def replay_run(fixture_dir, tmp_path_factory):
    """One completed replay run (all phases, session answered); shared read-only."""
    data = tmp_path_factory.mktemp("replay-data")
    config = replay_config(fixture_dir, data)
    reports = run_complete_pipeline(config, "demo")
    return {"config": config, "pipeline": Pipeline(config), "user": "demo", "reports": reports}


@pytest.fixture
def replay_pipeline(fixture_dir, tmp_path) -> Pipeline:
    """A fresh pipeline in replay mode with an empty data dir."""
    return Pipeline(replay_config(fixture_dir, tmp_path / "data"))


def _inst(iid: str, date: dt.date, what: str = "did a thing", **kw) -> BehavioralInstance:
    defaults = dict(
        what=what,
        when="Monday, 20:00-22:00",
        where="home",
        who="",
        why="needed doing",
        how="step by step",
        journal_entry_id="j1",
    )
    defaults.update(kw)
    return BehavioralInstance(id=iid, date=date, **defaults)


def sample_graph() -> LayeredGraph:
    """Small hand-built five-layer graph used across structural tests.

    Shape: one L4 node over two L3 nodes; node 2.3 aggregates three L1 nodes
    whose evidence all comes from instances 0.1-0.3 (so its trace is exactly
    that set, deduplicated); every other L1 node has its own instance.
    """
    d = dt.date
    instances = [
        _inst("0.1", d(2025, 9, 1), "caught up on unfinished assignments"),
        _inst("0.2", d(2025, 9, 3), "did intensive homework for a programming subject"),
        _inst("0.3", d(2025, 9, 4), "worked on a detailed practicum report"),
        _inst("0.4", d(2025, 9, 5), "felt satisfied after finishing a hard task"),
        _inst("0.5", d(2025, 9, 2), "deferred focused work into the late evening"),
        _inst("0.6", d(2025, 9, 2), "attended a morning programming session"),
        _inst("0.7", d(2025, 9, 3), "joined a departmental seminar"),
        _inst("0.8", d(2025, 9, 4), "managed back-to-back classes"),
    ]
    l1 = [
        PatternNode(id="1.1", layer=LayerTag.L1, title="Delayed Task Completion", content="Focused work shifts late.", source_ids=("0.5",)),
        PatternNode(id="1.2", layer=LayerTag.L1, title="Morning Programming Sessions", content="Morning coding practice.", source_ids=("0.6",)),
        PatternNode(id="1.3", layer=LayerTag.L1, title="Professional Development Meetings", content="Seminars and meetings.", source_ids=("0.7",)),
        PatternNode(id="1.4", layer=LayerTag.L1, title="Structured Class Management", content="Daily class handling.", source_ids=("0.8",)),
        PatternNode(id="1.5", layer=LayerTag.L1, title="Consistent Nighttime Academic Productivity", content="Significant academic tasks late in the evening.", source_ids=("0.1", "0.2", "0.3")),
        PatternNode(id="1.6", layer=LayerTag.L1, title="General Academic Task Completion", content="Homework and lab reports.", source_ids=("0.1", "0.2")),
        PatternNode(id="1.7", layer=LayerTag.L1, title="Exam Period Focus", content="Intense review under pressure.", source_ids=("0.3",)),
        PatternNode(id="1.8", layer=LayerTag.L1, title="Post-Completion Satisfaction", content="Validation after demanding tasks.", source_ids=("0.4",)),
    ]
    dims = [
        AnalyticalDimension(id="D2_1", layer=LayerTag.L2, title="Trigger-Response Analysis", description="Immediate reactions to cues."),
        AnalyticalDimension(id="D2_3", layer=LayerTag.L2, title="Behavior In Unstructured Time", description="Open-hours behavior."),
        AnalyticalDimension(id="D3_2", layer=LayerTag.L3, title="Reasoning For Load Management", description="Workload justification."),
        AnalyticalDimension(id="D3_3", layer=LayerTag.L3, title="Planning Versus Reactivity", description="Proactive vs reactive."),
        AnalyticalDimension(id="D4_2", layer=LayerTag.L4, title="Strategic Time Allocation", description="Long-horizon choices."),
    ]
    l2 = [
        PatternNode(id="2.1", layer=LayerTag.L2, title="External Structure Mediates Procrastination", content="Fixed commitments prevent deferral.", source_ids=("1.1", "1.2"), dimension_id="D2_1"),
        PatternNode(id="2.2", layer=LayerTag.L2, title="Routine Via Fixed Commitments", content="Schedule structured around appointments.", source_ids=("1.3", "1.4"), dimension_id="D2_1"),
        PatternNode(id="2.3", layer=LayerTag.L2, title="Task Completion As Anchor", content="Deliverables anchor the routine.", source_ids=("1.5", "1.6", "1.7"), dimension_id="D2_3"),
        PatternNode(id="2.4", layer=LayerTag.L2, title="Completion Signals Relaxation", content="Finishing work permits rest.", source_ids=("1.8",), dimension_id="D2_3"),
    ]
    l3 = [
        PatternNode(id="3.1", layer=LayerTag.L3, title="External Scaffolding For Initiation", content="Appointments anchor productivity.", source_ids=("2.1", "2.2"), dimension_id="D3_3"),
        PatternNode(id="3.2", layer=LayerTag.L3, title="Output Integrity Over Schedule", content="Timing compresses so deliverables land.", source_ids=("2.3", "2.4"), dimension_id="D3_2"),
    ]
    l4 = [
        PatternNode(id="4.1", layer=LayerTag.L4, title="Output Integrity As Core Value", content="Final quality justifies tactical sacrifice.", source_ids=("3.1", "3.2"), dimension_id="D4_2"),
    ]
    graph = LayeredGraph(user_id="sample").put_nodes(instances)
    graph = graph.put_nodes(l1, phase_state="l1_built").with_dimensions(dims)
    graph = graph.put_nodes(l2).put_nodes(l3)
    return graph.put_nodes(l4, phase_state="full_built")


@pytest.fixture
def five_layer_graph() -> LayeredGraph:
    return sample_graph()


@pytest.fixture
def make_instance():
    return _inst


@pytest.fixture
def default_config() -> PipelineConfig:
    return PipelineConfig()
