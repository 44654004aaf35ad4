"""Text tables and JSON summaries of metrics keyed by split and solver."""
import logging
from pathlib import Path
from typing import Dict, Tuple

import pandas as pd

from modules.models import LABEL_ORDER, QUERY_TYPE_ORDER, Metrics, QueryType, ReportSummary

logger = logging.getLogger(__name__)

TYPE_ABBREVIATIONS: Dict[QueryType, str] = {
    QueryType.DIRECT: "D.R.",
    QueryType.INDIRECT: "I.D.",
    QueryType.SCREENING_OFF: "S.O.",
    QueryType.BACKWARD_BLOCKING: "B.B.",
}


def _solvers(summary: ReportSummary):
    seen = []
    for per_solver in summary.entries.values():
        seen.extend(s for s in per_solver if s not in seen)
    return seen


def accuracy_table(summary: ReportSummary) -> pd.DataFrame:
    """Rows (solver, Qry./Pro.), columns splits, values in percent"""
    splits = list(summary.entries)
    index = pd.MultiIndex.from_tuples(
        [(solver, row) for solver in _solvers(summary) for row in ("Qry.", "Pro.")], names=["solver", "metric"]
    )
    table = pd.DataFrame(index=index, columns=splits, dtype=float)
    for split, per_solver in summary.entries.items():
        for solver, m in per_solver.items():
            table.loc[(solver, "Qry."), split] = 100 * m.query_accuracy
            table.loc[(solver, "Pro."), split] = 100 * m.problem_accuracy
    return table


def type_table(summary: ReportSummary) -> pd.DataFrame:
    """Per-type query accuracy in percent; rows D.R., I.D., S.O., B.B."""
    columns = pd.MultiIndex.from_tuples(
        [(split, solver) for split, per_solver in summary.entries.items() for solver in per_solver],
        names=["split", "solver"],
    )
    table = pd.DataFrame(index=[TYPE_ABBREVIATIONS[t] for t in QUERY_TYPE_ORDER], columns=columns, dtype=float)
    for split, per_solver in summary.entries.items():
        for solver, m in per_solver.items():
            for t in QUERY_TYPE_ORDER:
                value = m.per_type_accuracy.get(t)
                table.loc[TYPE_ABBREVIATIONS[t], (split, solver)] = None if value is None else 100 * value
    return table


def confusion_table(metrics: Metrics) -> pd.DataFrame:
    names = [label.value for label in LABEL_ORDER]
    return pd.DataFrame(
        [list(row) for row in metrics.per_label_confusion],
        index=pd.Index(names, name="truth"),
        columns=pd.Index(names, name="predicted"),
    )


def render_report(summary: ReportSummary) -> str:
    if not summary.entries:
        raise ValueError("render_report needs at least one metrics entry")
    blocks = [
        "Query / problem accuracy (%)",
        accuracy_table(summary).to_string(float_format=lambda v: f"{v:.2f}", na_rep="-"),
        "",
        "Per-type query accuracy (%)",
        type_table(summary).to_string(float_format=lambda v: f"{v:.2f}", na_rep="-"),
    ]
    for split, per_solver in summary.entries.items():
        for solver, m in per_solver.items():
            blocks += ["", f"Confusion {split} / {solver} ({m.n_problems} problems)", confusion_table(m).to_string()]
    return "\n".join(blocks) + "\n"


def encode_summary(summary: ReportSummary) -> str:
    return summary.model_dump_json(indent=2)


def decode_summary(text: str) -> ReportSummary:
    return ReportSummary.model_validate_json(text)


def write_report(summary: ReportSummary, out: Path) -> Tuple[Path, Path]:
    """Write OUT.txt and OUT.json next to each other; returns both paths"""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    text_path, json_path = out.with_suffix(".txt"), out.with_suffix(".json")
    text_path.write_text(render_report(summary), encoding="utf-8", newline="\n")
    json_path.write_text(encode_summary(summary) + "\n", encoding="utf-8", newline="\n")
    logger.info(f"Report written to {text_path} and {json_path}")
    return text_path, json_path
