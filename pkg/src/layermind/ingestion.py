"""Journal ingestion and 5W1H extraction.

Input corpora arrive as JSON Lines, one entry per line:
``{"id", "user_id", "date": "YYYY-MM-DD", "text"}``. Malformed entries are
rejected individually with a reason; the batch continues. Extraction renders
the extraction template per entry and turns each returned item into an L0
behavioral instance carrying the entry's date and id.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from layermind.errors import LlmFormatError, PreconditionError
from layermind.graph.model import BehavioralInstance, parse_when
from layermind.llm import LlmClient, LlmRequest, ask_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JournalEntry:
    id: str
    user_id: str
    date: dt.date
    text: str

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class Rejection:
    entry_id: str
    reason: str


@dataclass
class Corpus:
    """Deduplicated, date-sorted journal entries for one user."""

    user_id: str
    entries: list[JournalEntry] = field(default_factory=list)
    rejections: list[Rejection] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)


def _parse_entry(doc: dict) -> JournalEntry:
    text = doc.get("text", "")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("empty text")
    try:
        date = dt.date.fromisoformat(doc["date"])
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"malformed date: {doc.get('date')!r}") from None
    if not doc.get("id"):
        raise ValueError("missing id")
    return JournalEntry(id=str(doc["id"]), user_id=str(doc.get("user_id", "")), date=date, text=text)


def ingest(user_id: str, docs: list[dict]) -> Corpus:
    """Validate, deduplicate by id, and sort entries by date (then id)."""
    corpus = Corpus(user_id=user_id)
    seen: set[str] = set()
    for doc in docs:
        entry_id = str(doc.get("id", "?"))
        try:
            entry = _parse_entry(doc)
        except ValueError as exc:
            corpus.rejections.append(Rejection(entry_id, str(exc)))
            continue
        if entry.id in seen:
            corpus.rejections.append(Rejection(entry.id, "duplicate"))
            continue
        seen.add(entry.id)
        corpus.entries.append(entry)
    corpus.entries.sort(key=lambda e: (e.date.isoformat(), e.id))
    return corpus


def ingest_jsonl(user_id: str, payload: str) -> Corpus:
    docs = []
    for line_no, line in enumerate(payload.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            docs.append(json.loads(line))
        except json.JSONDecodeError:
            docs.append({"id": f"line-{line_no}", "text": ""})
    return ingest(user_id, docs)


def corpus_to_jsonl(corpus: Corpus) -> str:
    lines = [
        json.dumps(
            {"id": e.id, "user_id": e.user_id, "date": e.date.isoformat(), "text": e.text},
            ensure_ascii=False,
            sort_keys=True,
        )
        for e in corpus.entries
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def load_corpus_file(user_id: str, path: Path | str) -> Corpus:
    return ingest_jsonl(user_id, Path(path).read_text(encoding="utf-8"))


# ----------------------------------------------------------------------
# Extraction
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractionFailure:
    entry_id: str
    reason: str


def _validate_e0(payload) -> list[dict]:
    if not isinstance(payload, dict) or not isinstance(payload.get("informations"), list):
        raise ValueError("expected an object with an 'informations' array")
    for item in payload["informations"]:
        if not isinstance(item, dict):
            raise ValueError("each information item must be an object")
    return payload["informations"]


def extract_l0(entry: JournalEntry, client: LlmClient) -> list[BehavioralInstance]:
    """Extract the entry's behavioral instances via the extraction template.

    Items without a usable WHAT are dropped and logged; empty secondary
    fields are normalized to "unspecified" (WHO legitimately stays empty).
    ``when`` is parsed for a ``Day, HH:MM-HH:MM`` window; unparseable values
    keep their raw text with no time window.
    """
    request = LlmRequest("E0", {"text": entry.text})
    items = ask_json(client, request, validate=_validate_e0)
    instances: list[BehavioralInstance] = []
    ordinal = 0
    for item in items:
        what = str(item.get("WHAT", "") or "").strip()
        if not what:
            logger.warning("entry %s: dropping extracted item with missing WHAT", entry.id)
            continue
        ordinal += 1
        when = str(item.get("WHEN", "") or "").strip()
        _, window = parse_when(when)

        def _field(key: str) -> str:
            value = str(item.get(key, "") or "").strip()
            return value if value else "unspecified"

        instances.append(
            BehavioralInstance(
                id=f"{entry.id}-{ordinal}",
                what=what,
                when=when if when else "unspecified",
                where=_field("WHERE"),
                who=str(item.get("WHO", "") or "").strip(),
                why=_field("WHY"),
                how=_field("HOW"),
                date=entry.date,
                time_window=window,
                journal_entry_id=entry.id,
            )
        )
    return instances


def extract_corpus(
    corpus: Corpus,
    client: LlmClient,
    max_inflight: int = 4,
) -> tuple[list[BehavioralInstance], list[ExtractionFailure]]:
    """Extract every entry, independently and in submission order.

    A format failure (after the one corrective re-ask) is recorded against
    its entry; the rest of the batch proceeds.
    """
    if not corpus.entries:
        raise PreconditionError("corpus has no entries to extract")

    def one(entry: JournalEntry):
        try:
            return extract_l0(entry, client), None
        except LlmFormatError as exc:
            return [], ExtractionFailure(entry.id, str(exc))

    results: list[tuple[list[BehavioralInstance], ExtractionFailure | None]]
    with ThreadPoolExecutor(max_workers=max(1, max_inflight)) as pool:
        results = list(pool.map(one, corpus.entries))
    instances: list[BehavioralInstance] = []
    failures: list[ExtractionFailure] = []
    for extracted, failure in results:
        instances.extend(extracted)
        if failure is not None:
            failures.append(failure)
    return instances, failures
