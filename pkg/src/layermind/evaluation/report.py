"""Evaluation report assembly and CSV export."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

from layermind.evaluation.atomic import AtomicMatchReport
from layermind.evaluation.metrics import aggregate_scores
from layermind.evaluation.semantics import LayerSemantics


def build_report(
    condition: str,
    match_reports: Sequence[AtomicMatchReport],
    unanswered: int = 0,
    unevaluated: int = 0,
    semantics: Sequence[LayerSemantics] = (),
    jaccard_by_layer: Mapping[str, float] | None = None,
    likert: dict | None = None,
    correlations: dict | None = None,
    t_tests: dict | None = None,
) -> dict:
    overall = aggregate_scores(match_reports, "overall")
    by_layer = aggregate_scores(match_reports, "layer")
    per_item = {r.item_id: r.as_dict() for r in match_reports}
    return {
        "condition": condition,
        "overall": overall.as_dict(),
        "by_layer": {layer: s.as_dict() for layer, s in by_layer.items()},
        "items": per_item,
        "unanswered": unanswered,
        "unevaluated": unevaluated,
        "semantics": [s.as_dict() for s in semantics],
        "jaccard_by_layer": dict(jaccard_by_layer or {}),
        "likert": likert,
        "correlations": correlations or {},
        "t_tests": t_tests or {},
    }


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def report_csvs(report: dict) -> dict[str, str]:
    """CSV views of one report, keyed by file stem, mirroring the table layouts."""
    out: dict[str, str] = {}
    o = report["overall"]
    out["overall"] = _csv(
        [
            ["condition", "precision", "recall", "f1", "sd", "tp", "fp", "fn"],
            [report["condition"], o["precision"], o["recall"], o["f1"], o["sd"], o["tp"], o["fp"], o["fn"]],
        ]
    )
    rows = [["layer", "condition", "precision", "recall", "f1", "sd", "tp", "fp", "fn"]]
    for layer, s in sorted(report["by_layer"].items()):
        rows.append(
            [layer, report["condition"], s["precision"], s["recall"], s["f1"], s["sd"], s["tp"], s["fp"], s["fn"]]
        )
    out["by_layer"] = _csv(rows)
    rows = [["layer", "condition", "coherence", "similarity", "silhouette", "topics"]]
    for s in report["semantics"]:
        rows.append(
            [s["layer"], report["condition"], s["coherence"], s["similarity"], s["silhouette"], s["topic_count"]]
        )
    out["semantics"] = _csv(rows)
    rows = [["layer", "jaccard"]]
    for layer, value in sorted(report["jaccard_by_layer"].items()):
        rows.append([layer, value])
    out["jaccard"] = _csv(rows)
    if report.get("likert"):
        rows = [["layer", "phase", "mean", "sd", "n", "normalized_pct"]]
        for phase, s in report["likert"]["overall"].items():
            rows.append(["overall", phase, s["mean"], s["sd"], s["n"], s["normalized_pct"]])
        for layer, phases in report["likert"]["by_layer"].items():
            for phase, s in phases.items():
                rows.append([layer, phase, s["mean"], s["sd"], s["n"], s["normalized_pct"]])
        out["likert"] = _csv(rows)
    if report.get("correlations"):
        rows = [["variables", "r", "p"]]
        for name, value in sorted(report["correlations"].items()):
            rows.append([name, value.get("r"), value.get("p")])
        out["correlations"] = _csv(rows)
    return out


def write_report_csvs(report: dict, out_dir: Path | str) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for stem, payload in report_csvs(report).items():
        path = out_dir / f"{report['condition']}_{stem}.csv"
        path.write_text(payload, encoding="utf-8")
        written.append(path)
    return written
