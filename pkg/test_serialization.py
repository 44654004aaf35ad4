import json

import pytest

from config.settings import GenConfig
from modules.exceptions import ProblemDecodeError
from modules.generator import generate_split
from modules.models import Label, Prediction, Split
from modules.serialization import (
    decode_prediction,
    decode_problem,
    encode_prediction,
    encode_problem,
    read_predictions,
    read_problems,
    sanitize_for_json,
    write_predictions,
    write_problems,
)


def test_problem_round_trip(small_iid):
    for problem in small_iid.problems:
        assert decode_problem(encode_problem(problem)) == problem


def test_solution_section_holds_blicket_flags(small_iid):
    problem = small_iid.problems[0]
    record = json.loads(encode_problem(problem))
    assert record["solution"]["blickets"] == list(problem.blicket_ids)
    assert all("is_blicket" not in o for o in record["objects"])


def test_unknown_color_names_the_field(small_iid):
    record = json.loads(encode_problem(small_iid.problems[0]))
    record["objects"][0]["color"] = "magenta"
    with pytest.raises(ProblemDecodeError) as info:
        decode_problem(json.dumps(record))
    assert info.value.field == "color"
    assert "color" in str(info.value)


def test_unknown_keys_are_rejected(small_iid):
    record = json.loads(encode_problem(small_iid.problems[0]))
    record["hint"] = "the red cube"
    with pytest.raises(ProblemDecodeError):
        decode_problem(json.dumps(record))


def test_files_are_byte_stable(tmp_path, small_iid):
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_problems(first, small_iid.problems)
    write_problems(second, read_problems(first))
    assert first.read_bytes() == second.read_bytes()
    assert b"\r\n" not in first.read_bytes()


def test_predictions_round_trip(tmp_path):
    predictions = [
        Prediction(problem_id="iid-00000", labels=(Label.ACTIVATED, Label.INACTIVATED, Label.UNDETERMINED, Label.ACTIVATED))
    ]
    path = tmp_path / "pred.jsonl"
    write_predictions(path, predictions)
    assert read_predictions(path) == predictions
    assert decode_prediction(encode_prediction(predictions[0])) == predictions[0]


def test_prediction_with_three_labels_is_rejected():
    with pytest.raises(ProblemDecodeError) as info:
        decode_prediction('{"problem_id":"x","labels":["activated","activated","activated"]}')
    assert info.value.field == "labels"


def test_sanitize_replaces_non_finite_numbers():
    assert sanitize_for_json({"h": float("inf"), "loss": float("nan"), "w": [1.5, 2]}) == {
        "h": None,
        "loss": None,
        "w": [1.5, 2],
    }


@pytest.mark.slow
def test_full_split_round_trip():
    dataset = generate_split(Split.IID, GenConfig(problems_per_split=10_000), master_seed=0)
    assert len(dataset.problems) == 10_000
    for problem in dataset.problems:
        assert decode_problem(encode_problem(problem)) == problem
