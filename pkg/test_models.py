import pytest
from pydantic import ValidationError

from modules.models import (
    Color,
    Label,
    Material,
    Prediction,
    Shape,
    attribute_space,
    redact,
)


def test_attribute_space_is_complete_and_canonical():
    space = attribute_space()
    assert len(space) == 48
    assert len(set(space)) == 48
    assert space[0] == (Shape.CUBE, Material.METAL, Color.GRAY)
    assert space[-1] == (Shape.CYLINDER, Material.RUBBER, Color.YELLOW)


def test_prediction_needs_four_labels():
    Prediction(problem_id="p", labels=(Label.ACTIVATED,) * 4)
    with pytest.raises(ValidationError):
        Prediction(problem_id="p", labels=(Label.ACTIVATED,) * 3)


def test_redacted_view_hides_solution(small_iid):
    problem = small_iid.problems[0]
    view = redact(problem)
    dumped = view.model_dump()
    assert view.context == problem.context
    assert [q.object_ids for q in view.queries] == [q.object_ids for q in problem.queries]
    assert "is_blicket" not in str(dumped)
    assert all("label" not in q and "query_type" not in q for q in dumped["queries"])


def test_problems_are_immutable(small_iid):
    with pytest.raises(ValidationError):
        small_iid.problems[0].problem_id = "other"
