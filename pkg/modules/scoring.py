from collections import Counter
from typing import Dict, List, Optional, Sequence

import numpy as np

from modules.exceptions import EvaluationError
from modules.models import LABEL_ORDER, QUERY_TYPE_ORDER, Label, Metrics, Prediction, Problem, QueryType


class MetricsScorer:
    """Accumulates query outcomes; partial scorers merge by addition in any order"""

    def __init__(self):
        self.correct_queries = 0
        self.total_queries = 0
        self.correct_problems = 0
        self.total_problems = 0
        self.type_correct: Counter = Counter()
        self.type_total: Counter = Counter()
        self.confusion = np.zeros((len(LABEL_ORDER), len(LABEL_ORDER)), dtype=np.int64)

    def add(self, problem: Problem, labels: Sequence[Label]) -> None:
        hits = 0
        for query, predicted in zip(problem.queries, labels):
            ok = query.label == predicted
            hits += ok
            self.type_total[query.query_type] += 1
            self.type_correct[query.query_type] += ok
            self.confusion[LABEL_ORDER.index(query.label), LABEL_ORDER.index(predicted)] += 1
        self.correct_queries += hits
        self.total_queries += len(problem.queries)
        self.correct_problems += hits == len(problem.queries)
        self.total_problems += 1

    def merge(self, other: "MetricsScorer") -> "MetricsScorer":
        merged = MetricsScorer()
        for name in ("correct_queries", "total_queries", "correct_problems", "total_problems"):
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        merged.type_correct = self.type_correct + other.type_correct
        merged.type_total = self.type_total + other.type_total
        merged.confusion = self.confusion + other.confusion
        return merged

    def _type_accuracy(self, query_type: QueryType) -> Optional[float]:
        total = self.type_total[query_type]
        return self.type_correct[query_type] / total if total else None

    def metrics(self) -> Metrics:
        return Metrics(
            query_accuracy=self.correct_queries / self.total_queries if self.total_queries else 0.0,
            problem_accuracy=self.correct_problems / self.total_problems if self.total_problems else 0.0,
            per_type_accuracy={t: self._type_accuracy(t) for t in QUERY_TYPE_ORDER},
            per_label_confusion=tuple(tuple(int(c) for c in row) for row in self.confusion),
            n_problems=self.total_problems,
        )


def match_predictions(predictions: Sequence[Prediction], problems: Sequence[Problem]) -> List[Prediction]:
    """Predictions aligned to the problem order; any mismatch in ids is an EvaluationError"""
    by_id: Dict[str, Prediction] = {}
    duplicates = []
    for p in predictions:
        if p.problem_id in by_id:
            duplicates.append(p.problem_id)
        by_id[p.problem_id] = p
    expected = {p.problem_id for p in problems}
    missing = expected - by_id.keys()
    extra = (by_id.keys() - expected) | set(duplicates)
    if missing or extra:
        raise EvaluationError(missing=missing, extra=extra)
    return [by_id[p.problem_id] for p in problems]


def evaluate(predictions: Sequence[Prediction], problems: Sequence[Problem]) -> Metrics:
    """Query, problem and per-type accuracy of one prediction per problem"""
    scorer = MetricsScorer()
    for problem, prediction in zip(problems, match_predictions(predictions, problems)):
        scorer.add(problem, prediction.labels)
    return scorer.metrics()
