import pytest

from modules.exceptions import EvaluationError
from modules.models import LABEL_ORDER, Label, Prediction, QueryType
from modules.scoring import MetricsScorer, evaluate


def truth(problem):
    return Prediction(problem_id=problem.problem_id, labels=tuple(q.label for q in problem.queries))


def wrong(label):
    return next(other for other in LABEL_ORDER if other != label)


def test_perfect_predictions(small_iid):
    metrics = evaluate([truth(p) for p in small_iid.problems], small_iid.problems)
    assert metrics.query_accuracy == 1.0
    assert metrics.problem_accuracy == 1.0
    assert metrics.n_problems == 40
    diagonal = sum(metrics.per_label_confusion[i][i] for i in range(3))
    assert diagonal == 160


def test_three_of_four_everywhere(small_iid):
    predictions = []
    for p in small_iid.problems:
        labels = [q.label for q in p.queries]
        labels[3] = wrong(labels[3])
        predictions.append(Prediction(problem_id=p.problem_id, labels=tuple(labels)))
    metrics = evaluate(predictions, small_iid.problems)
    assert metrics.query_accuracy == 0.75
    assert metrics.problem_accuracy == 0.0


def test_confusion_rows_sum_to_label_counts(small_iid):
    predictions = [Prediction(problem_id=p.problem_id, labels=(Label.ACTIVATED,) * 4) for p in small_iid.problems]
    metrics = evaluate(predictions, small_iid.problems)
    for i, label in enumerate(LABEL_ORDER):
        count = sum(q.label == label for p in small_iid.problems for q in p.queries)
        assert sum(metrics.per_label_confusion[i]) == count
        assert metrics.per_label_confusion[i][2] == count
    assert metrics.problem_accuracy <= metrics.query_accuracy


def test_per_type_accuracy_is_partitioned(small_iid):
    metrics = evaluate([truth(p) for p in small_iid.problems], small_iid.problems)
    present = {q.query_type for p in small_iid.problems for q in p.queries}
    for query_type in QueryType:
        expected = 1.0 if query_type in present else None
        assert metrics.per_type_accuracy[query_type] == expected


def test_missing_and_extra_predictions_are_listed(small_iid):
    problems = small_iid.problems[:3]
    predictions = [truth(p) for p in problems[1:]] + [Prediction(problem_id="ghost", labels=(Label.ACTIVATED,) * 4)]
    with pytest.raises(EvaluationError) as info:
        evaluate(predictions, problems)
    assert info.value.missing == [problems[0].problem_id]
    assert info.value.extra == ["ghost"]


def test_merge_is_order_independent(small_iid):
    problems = small_iid.problems
    left, right, whole = MetricsScorer(), MetricsScorer(), MetricsScorer()
    for i, p in enumerate(problems):
        labels = [Label.ACTIVATED] * 4
        (left if i % 2 else right).add(p, labels)
        whole.add(p, labels)
    assert left.merge(right).metrics() == whole.metrics() == right.merge(left).metrics()
