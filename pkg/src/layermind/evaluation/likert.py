"""Likert rating capture and per-layer/per-phase summaries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from layermind.errors import PreconditionError

PHASES = ("pre_hitl", "post_hitl")


@dataclass(frozen=True)
class LikertRecord:
    node_id: str
    phase: str  # pre_hitl | post_hitl
    rating: int  # 1..5

    def __post_init__(self):
        if self.phase not in PHASES:
            raise PreconditionError(f"unknown phase: {self.phase!r}")
        if not isinstance(self.rating, int) or not 1 <= self.rating <= 5:
            raise PreconditionError(f"rating must be an integer in [1, 5], got {self.rating!r}")


class LikertLog:
    """Append-only JSONL file of ratings for one user."""

    def __init__(self, path: Path | str):
        self.path = Path(path)

    def record(self, record: LikertRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"node_id": record.node_id, "phase": record.phase, "rating": record.rating},
                    sort_keys=True,
                )
                + "\n"
            )

    def records(self) -> list[LikertRecord]:
        if not self.path.is_file():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                doc = json.loads(line)
                out.append(LikertRecord(doc["node_id"], doc["phase"], int(doc["rating"])))
        return out


def _summary(ratings: list[int]) -> dict:
    n = len(ratings)
    if n == 0:
        return {"mean": None, "sd": None, "n": 0, "normalized_pct": None}
    mean = sum(ratings) / n
    sd = None
    if n >= 2:
        sd = math.sqrt(sum((r - mean) ** 2 for r in ratings) / (n - 1))
    # normalization maps the 1..5 scale onto 0..100: (mean - 1) / 4
    return {
        "mean": round(mean, 6),
        "sd": round(sd, 6) if sd is not None else None,
        "n": n,
        "normalized_pct": round((mean - 1) / 4 * 100, 6),
    }


def summarize_likert(
    records: Iterable[LikertRecord],
    node_layers: Mapping[str, str],
) -> dict:
    """Mean/SD/N per phase, overall and per layer."""
    by_phase: dict[str, list[int]] = {phase: [] for phase in PHASES}
    by_layer: dict[str, dict[str, list[int]]] = {}
    for record in records:
        by_phase[record.phase].append(record.rating)
        layer = node_layers.get(record.node_id, "unknown")
        by_layer.setdefault(layer, {p: [] for p in PHASES})[record.phase].append(record.rating)
    return {
        "overall": {phase: _summary(vals) for phase, vals in by_phase.items()},
        "by_layer": {
            layer: {phase: _summary(vals) for phase, vals in phases.items()}
            for layer, phases in sorted(by_layer.items())
        },
    }
