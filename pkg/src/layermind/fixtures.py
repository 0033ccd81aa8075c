"""Shipped synthetic corpus and fixture recording/verification drivers.

The demo corpus is ~30 dated entries for one user, engineered around
recurring activity archetypes: within an archetype, instances share the core
activity plus location/reason/method (consensus score well above the
threshold on different days); across archetypes the overlap stays below it.
One archetype pair shares everything except the activity itself, exercising
the multi-pattern synthesis path. Two one-off events stay unclustered.

``record_fixtures`` runs the whole pipeline against a live backend (the
deterministic scripted one by default) capturing every response;
``verify_fixtures`` replays the capture twice into fresh data dirs and diffs
the graph exports and evaluation reports byte for byte.
"""

from __future__ import annotations

import datetime as dt
import json
import shutil
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

from layermind.config import PipelineConfig
from layermind.pipeline import Pipeline
from layermind.prompts import asset_root

DEMO_USER = "demo"
_WEEK0_MONDAY = dt.date(2025, 9, 1)
_DAY_INDEX = {"Monday": 0, "Tuesday": 1, "Wednesday": 2, "Thursday": 3, "Friday": 4, "Saturday": 5, "Sunday": 6}


@dataclass(frozen=True)
class Archetype:
    what: str
    where: str
    who: str
    why: str
    how: str
    start: str
    end: str
    slots: tuple[tuple[int, str], ...]  # (week number from 1, weekday name)


ARCHETYPES: tuple[Archetype, ...] = (
    Archetype(
        "worked on unfinished programming assignments", "my dormitory desk", "",
        "the assignment backlog needed clearing before the next lecture",
        "working through one task at a time on my laptop",
        "20:00", "22:00", ((1, "Monday"), (2, "Wednesday"), (3, "Thursday"), (4, "Monday")),
    ),
    Archetype(
        "attended the algorithms lecture", "the engineering building", "",
        "the course credits are required for graduation",
        "taking structured notes by hand",
        "08:00", "10:00", ((1, "Tuesday"), (2, "Friday"), (4, "Tuesday")),
    ),
    Archetype(
        "played badminton matches", "the sports hall", "friends from class",
        "the weekly game keeps my energy up",
        "rotating doubles partners every set",
        "16:00", "18:00", ((1, "Wednesday"), (3, "Wednesday"), (5, "Wednesday")),
    ),
    Archetype(
        "met for the software group project", "the campus library", "my project teammates",
        "we needed to divide the remaining tasks fairly",
        "walking through the issue board together",
        "13:00", "15:00", ((1, "Thursday"), (2, "Thursday"), (4, "Thursday")),
    ),
    Archetype(
        "reviewed database lecture material for the midterm", "the quiet study room", "",
        "the midterm covers six chapters of material",
        "condensing each chapter into flashcards",
        "19:00", "21:00", ((1, "Friday"), (3, "Monday"), (4, "Wednesday")),
    ),
    Archetype(
        "ate lunch and caught up on campus news", "the student cafeteria", "my roommates",
        "sharing meals keeps our friendship strong",
        "trying a different food stall each visit",
        "12:00", "13:00", ((2, "Tuesday"), (3, "Thursday"), (5, "Friday")),
    ),
    Archetype(
        "went for a short morning jog", "the campus track", "",
        "starting the day with exercise clears my head",
        "keeping an easy steady pace",
        "06:30", "07:15", ((1, "Saturday"), (3, "Tuesday"), (4, "Saturday")),
    ),
    Archetype(
        "played two online ranked matches to unwind", "my dormitory room", "online friends",
        "finishing my duties first makes the games guilt-free",
        "queueing a duo lobby with a timer set",
        "22:00", "23:00", ((1, "Friday"), (2, "Saturday"), (4, "Friday")),
    ),
    Archetype(
        "wrote the daily reflection journal", "my dormitory desk", "",
        "recording the day helps me plan tomorrow",
        "listing wins and pending items in a notebook",
        "23:00", "23:30", ((1, "Sunday"), (3, "Wednesday"), (4, "Sunday")),
    ),
    Archetype(
        "attended the department technology seminar", "the main auditorium", "",
        "the talks cover cloud tools our projects will need",
        "asking one question during the open session",
        "15:00", "17:00", ((2, "Monday"), (5, "Thursday")),
    ),
    Archetype(
        "wrote the electronics practicum report", "the campus library", "",
        "the measurements had to be documented while fresh",
        "checking each figure against the lab sheet",
        "21:00", "22:30", ((1, "Tuesday"), (2, "Thursday"), (5, "Monday")),
    ),
    Archetype(
        "helped a classmate debug their code", "the computer lab", "a classmate from my course",
        "explaining bugs helps me understand them deeper",
        "reading the error trace line by line",
        "14:00", "15:00", ((2, "Wednesday"), (3, "Friday")),
    ),
    Archetype(
        "organized the coming week's study schedule", "my dormitory desk", "",
        "planning ahead reduces pressure later in the week",
        "blocking hours in the planner app",
        "09:00", "10:00", ((1, "Sunday"), (3, "Sunday")),
    ),
    Archetype(
        "sorted my lecture notes into subject folders", "my dormitory desk", "",
        "planning ahead reduces pressure later in the week",
        "blocking hours in the planner app",
        "10:30", "11:15", ((2, "Sunday"), (4, "Sunday")),
    ),
    Archetype(
        "visited the dentist for a checkup", "the downtown clinic", "",
        "the reminder said the appointment could not move",
        "taking the morning bus into town",
        "10:00", "11:00", ((5, "Wednesday"),),
    ),
    Archetype(
        "collected a package from the post office", "the campus mail room", "",
        "the delivery slip expired that weekend",
        "showing my student card at the counter",
        "11:00", "11:30", ((3, "Saturday"),),
    ),
)

_FILLERS = (
    "The campus felt unusually quiet for a weekday.",
    "Rain kept most people indoors after classes.",
    "The cafeteria queue was longer than normal.",
    "A short power cut interrupted the evening for a few minutes.",
)


def _event_sentence(arc: Archetype, weekday: str) -> str:
    who = f" with {arc.who}" if arc.who else ""
    return (
        f"On {weekday} from {arc.start} to {arc.end}, I {arc.what} at {arc.where}{who}, "
        f"because {arc.why}, by {arc.how}."
    )


def build_demo_corpus(user_id: str = DEMO_USER) -> list[dict]:
    """Entry documents (JSONL-ready dicts) for the demo user, sorted by date."""
    events_by_date: dict[dt.date, list[tuple[str, str]]] = {}
    for arc in ARCHETYPES:
        for week, weekday in arc.slots:
            date = _WEEK0_MONDAY + dt.timedelta(days=(week - 1) * 7 + _DAY_INDEX[weekday])
            events_by_date.setdefault(date, []).append((arc.start, _event_sentence(arc, weekday)))
    entries = []
    for i, date in enumerate(sorted(events_by_date)):
        sentences = [s for _, s in sorted(events_by_date[date])]
        if i % 4 == 0:
            sentences.append(_FILLERS[(i // 4) % len(_FILLERS)])
        entries.append(
            {
                "id": f"j{date.strftime('%Y%m%d')}",
                "user_id": user_id,
                "date": date.isoformat(),
                "text": " ".join(sentences),
            }
        )
    return entries


def demo_corpus_jsonl() -> str:
    return "\n".join(json.dumps(doc, ensure_ascii=False, sort_keys=True) for doc in build_demo_corpus()) + "\n"


def shipped_corpus_path() -> Path:
    return asset_root() / "corpus" / "demo.jsonl"


# ----------------------------------------------------------------------
# Deterministic review answers
# ----------------------------------------------------------------------

SKIP = None

_ANSWER_TEMPLATES = (
    "Yes, that is accurate. I usually handle {topic} the same way each week, and I protect that "
    "time on purpose, because finishing the required work early lowers my stress and leaves the "
    "evening genuinely free.",
    "Provides focus.",
    "Mostly right, but the timing shifts. I keep {topic} flexible when deadlines stack up, and I "
    "move it rather than drop it.",
    "That is true. The habit around {topic} started as a necessity, and it stayed because it works.",
)


def synthetic_answer(question: str, node_title: str, index: int) -> str | None:
    """Deterministic answer for a session item; every 8th item is skipped."""
    if index % 8 == 7:
        return SKIP
    template = _ANSWER_TEMPLATES[index % len(_ANSWER_TEMPLATES)]
    topic_words = [w for w in node_title.lower().split() if len(w) > 3][:3]
    return template.format(topic=" ".join(topic_words) or "this routine")


# ----------------------------------------------------------------------
# Record / verify drivers
# ----------------------------------------------------------------------

FULL_PHASES = ("extract", "phase1", "phase2", "evaluate_pre", "hitl")


def run_session_answers(pipeline: Pipeline, user_id: str) -> dict:
    """Answer (or skip) every pending session item with synthetic feedback."""
    session = pipeline.load_session(user_id)
    graph = pipeline.store.load(user_id)
    answered = skipped = 0
    for index, item in enumerate(list(session.items)):
        if item.status != "pending":
            continue
        answer = synthetic_answer(item.question, graph.node(item.node_id).title, index)
        if answer is SKIP:
            pipeline.skip_session_item(user_id, item.id)
            skipped += 1
        else:
            pipeline.answer_item(user_id, item.id, answer)
            answered += 1
    return {"answered": answered, "skipped": skipped}


def run_complete_pipeline(config: PipelineConfig, user_id: str = DEMO_USER, corpus_jsonl: str | None = None) -> list[dict]:
    """Ingest the demo corpus and run every phase, answering the session."""
    pipeline = Pipeline(config)
    payload = corpus_jsonl if corpus_jsonl is not None else shipped_corpus_path().read_text(encoding="utf-8")
    reports = [pipeline.ingest_journals(user_id, payload)]
    for phase in FULL_PHASES:
        reports.append(pipeline.run_phase(user_id, phase))
    reports.append({"phase": "session_answers", **run_session_answers(pipeline, user_id)})
    reports.append(pipeline.run_phase(user_id, "evaluate_post"))
    return reports


def mode_config(mode: str, fixture_dir: Path | str, data_dir: Path | str) -> PipelineConfig:
    config = PipelineConfig()
    config.llm = replace(config.llm, mode=mode, fixture_dir=str(fixture_dir))
    config.data_dir = str(data_dir)
    return config.validate()


def record_fixtures(fixture_dir: Path | str, data_dir: Path | str, user_id: str = DEMO_USER) -> list[dict]:
    """Capture the full pipeline's LLM traffic into ``fixture_dir``."""
    return run_complete_pipeline(mode_config("record", fixture_dir, data_dir), user_id)


def replay_config(fixture_dir: Path | str, data_dir: Path | str) -> PipelineConfig:
    return mode_config("replay", fixture_dir, data_dir)


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True).encode("utf-8")


def run_replay_once(fixture_dir: Path | str, data_dir: Path | str, user_id: str = DEMO_USER) -> dict:
    """One full replay run; returns the byte-level artifacts to compare."""
    config = replay_config(fixture_dir, data_dir)
    run_complete_pipeline(config, user_id)
    pipeline = Pipeline(config)
    return {
        "graph_export": _canonical(pipeline.export_graph(user_id)),
        "report_pre": _canonical(pipeline.export_report(user_id, "pre")),
        "report_post": _canonical(pipeline.export_report(user_id, "post")),
    }


def verify_fixtures(fixture_dir: Path | str, user_id: str = DEMO_USER) -> dict:
    """Replay twice into fresh data dirs and diff the exports byte for byte."""
    results = []
    for _ in range(2):
        tmp = Path(tempfile.mkdtemp(prefix="layermind-verify-"))
        try:
            results.append(run_replay_once(fixture_dir, tmp, user_id))
        finally:
            shutil.rmtree(tmp, ignore_errors=True)
    first, second = results
    mismatches = [key for key in first if first[key] != second[key]]
    return {
        "identical": not mismatches,
        "mismatched_artifacts": mismatches,
        "artifacts": sorted(first),
    }
