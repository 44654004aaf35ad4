import json
import math
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from modules.exceptions import ProblemDecodeError
from modules.models import (
    Color,
    ContextTrial,
    Fold,
    Label,
    Material,
    MachineState,
    ObjectSpec,
    Prediction,
    Problem,
    Query,
    QueryKind,
    QueryType,
    Shape,
    Split,
)

logger = logging.getLogger(__name__)


# Wire records mirror the JSONL schema one-to-one
class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ObjectRecord(_Record):
    id: int = Field(..., ge=0)
    shape: Shape
    material: Material
    color: Color


class TrialRecord(_Record):
    objects: List[int] = Field(..., min_length=1)
    light: MachineState


class QueryRecord(_Record):
    objects: List[int] = Field(..., min_length=1)
    kind: QueryKind
    base_trial: Optional[int] = None
    label: Label
    type: QueryType


class SolutionRecord(_Record):
    blickets: List[int]


class ProblemRecord(_Record):
    problem_id: str
    seed: int = Field(..., ge=0, lt=2**64)
    split: Split
    fold: Fold
    objects: List[ObjectRecord]
    context: List[TrialRecord]
    queries: List[QueryRecord]
    solution: SolutionRecord


class PredictionRecord(_Record):
    problem_id: str
    labels: List[Label] = Field(..., min_length=4, max_length=4)


def _field_name(error: ValidationError) -> str:
    """Innermost named field of the first validation error"""
    loc = error.errors()[0]["loc"]
    names = [str(part) for part in loc if isinstance(part, str)]
    return names[-1] if names else "<root>"


def encode_problem(problem: Problem) -> str:
    """Encode a problem as a single JSON line (no trailing newline)"""
    record: Dict[str, Any] = {
        "problem_id": problem.problem_id,
        "seed": problem.seed,
        "split": problem.split.value,
        "fold": problem.fold.value,
        "objects": [
            {"id": o.id, "shape": o.shape.value, "material": o.material.value, "color": o.color.value}
            for o in problem.objects
        ],
        "context": [
            {"objects": list(t.object_ids), "light": t.machine_state.value} for t in problem.context
        ],
        "queries": [],
        "solution": {"blickets": list(problem.blicket_ids)},
    }
    for q in problem.queries:
        query: Dict[str, Any] = {"objects": list(q.object_ids), "kind": q.kind.value}
        if q.base_trial_index is not None:
            query["base_trial"] = q.base_trial_index
        query["label"] = q.label.value
        query["type"] = q.query_type.value
        record["queries"].append(query)
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


def decode_problem(line: str) -> Problem:
    try:
        record = ProblemRecord.model_validate_json(line)
    except ValidationError as e:
        raise ProblemDecodeError(_field_name(e), str(e.errors()[0]["msg"])) from e

    blickets = set(record.solution.blickets)
    known = {o.id for o in record.objects}
    if not blickets <= known:
        raise ProblemDecodeError("blickets", f"unknown object ids {sorted(blickets - known)}")

    return Problem(
        problem_id=record.problem_id,
        seed=record.seed,
        split=record.split,
        fold=record.fold,
        objects=tuple(
            ObjectSpec(
                id=o.id, shape=o.shape, material=o.material, color=o.color, is_blicket=o.id in blickets
            )
            for o in record.objects
        ),
        context=tuple(
            ContextTrial(object_ids=tuple(t.objects), machine_state=t.light) for t in record.context
        ),
        queries=tuple(
            Query(
                object_ids=tuple(q.objects),
                kind=q.kind,
                base_trial_index=q.base_trial,
                label=q.label,
                query_type=q.type,
            )
            for q in record.queries
        ),
    )


def _write_lines(path: Path, lines: Iterable[str]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line)
            f.write("\n")
            count += 1
    return count


def _read_lines(path: Path) -> Iterator[Tuple[int, str]]:
    with Path(path).open("r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                yield number, line


def write_problems(path: Path, problems: Iterable[Problem]) -> int:
    count = _write_lines(path, (encode_problem(p) for p in problems))
    logger.info(f"Wrote {count} problems to {path}")
    return count


def read_problems(path: Path) -> List[Problem]:
    problems = []
    for number, line in _read_lines(path):
        try:
            problems.append(decode_problem(line))
        except ProblemDecodeError as e:
            raise ProblemDecodeError(e.field, f"{path}:{number}: {e}") from e
    logger.info(f"Read {len(problems)} problems from {path}")
    return problems


def encode_prediction(prediction: Prediction) -> str:
    return json.dumps(
        {"problem_id": prediction.problem_id, "labels": [label.value for label in prediction.labels]},
        separators=(",", ":"),
    )


def decode_prediction(line: str) -> Prediction:
    try:
        record = PredictionRecord.model_validate_json(line)
    except ValidationError as e:
        raise ProblemDecodeError(_field_name(e), str(e.errors()[0]["msg"])) from e
    return Prediction(problem_id=record.problem_id, labels=tuple(record.labels))


def write_predictions(path: Path, predictions: Iterable[Prediction]) -> int:
    count = _write_lines(path, (encode_prediction(p) for p in predictions))
    logger.info(f"Wrote {count} predictions to {path}")
    return count


def read_predictions(path: Path) -> List[Prediction]:
    return [decode_prediction(line) for _, line in _read_lines(path)]


def sanitize_for_json(obj: Any) -> Any:
    """Recursively replace NaN and infinities with None and stringify unknown types"""
    if isinstance(obj, dict):
        return {str(key): sanitize_for_json(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize_for_json(item) for item in obj]
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, (int, str, bool, type(None))):
        return obj
    return str(obj)


def write_records(path: Path, records: Iterable[Dict[str, Any]]) -> int:
    """Plain JSONL for sidecar files (scenes, diagnostics)"""
    return _write_lines(path, (json.dumps(sanitize_for_json(r), separators=(",", ":")) for r in records))
