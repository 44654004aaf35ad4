from modules.models import ContextTrial, MachineState
from modules.validation import validate_problem


def test_generated_problems_are_valid(small_iid, small_sys, small_comp):
    for dataset in (small_iid, small_sys, small_comp):
        for problem in dataset.problems:
            assert validate_problem(problem) == [], problem.problem_id


def test_too_few_objects(small_iid):
    problem = small_iid.problems[0]
    mutated = problem.model_copy(update={"objects": problem.objects[:4]})
    assert "object-count" in validate_problem(mutated)


def test_blicket_with_machine_off_is_flagged(small_iid):
    problem = small_iid.problems[0]
    index = next(i for i, t in enumerate(problem.context) if i >= 3 and t.machine_state == MachineState.ON)
    flipped = ContextTrial(object_ids=problem.context[index].object_ids, machine_state=MachineState.OFF)
    context = problem.context[:index] + (flipped,) + problem.context[index + 1 :]
    mutated = problem.model_copy(update={"context": context})
    assert validate_problem(mutated) == ["mechanism-consistency"]


def test_wrong_label_is_flagged(small_iid):
    problem = small_iid.problems[1]
    query = problem.queries[0]
    other = next(label for label in type(query.label) if label != query.label)
    mutated = problem.model_copy(
        update={"queries": (query.model_copy(update={"label": other}),) + problem.queries[1:]}
    )
    assert validate_problem(mutated) == ["label-consistency"]


def test_independent_query_with_two_objects_is_reported_not_raised(small_iid):
    problem = small_iid.problems[2]
    query = problem.queries[0]
    extra = next(o.id for o in problem.objects if o.id not in query.object_ids)
    widened = query.model_copy(update={"object_ids": tuple(sorted(query.object_ids + (extra,)))})
    mutated = problem.model_copy(update={"queries": (widened,) + problem.queries[1:]})
    violations = validate_problem(mutated)
    assert "independent-shape" in violations
    assert "type-consistency" not in violations
