import json

import pytest

import main
from modules.serialization import read_predictions, read_problems


@pytest.fixture(autouse=True)
def no_log_file(monkeypatch, tmp_path):
    monkeypatch.setattr(main.settings, "LOG_FILE", str(tmp_path / "logs" / "test.log"))


@pytest.fixture
def data_file(tmp_path):
    path = tmp_path / "iid.jsonl"
    assert main.main(["generate", "--split", "iid", "--count", "20", "--seed", "3", "--out", str(path), "--workers", "1"]) == 0
    return path


def test_generate_writes_valid_problems(data_file, tmp_path):
    problems = read_problems(data_file)
    assert len(problems) == 20
    scenes = tmp_path / "scenes.jsonl"
    again = tmp_path / "again.jsonl"
    args = ["generate", "--split", "iid", "--count", "20", "--seed", "3", "--out", str(again), "--scenes", str(scenes)]
    assert main.main(args + ["--workers", "1"]) == 0
    assert again.read_bytes() == data_file.read_bytes()
    assert len(scenes.read_text(encoding="utf-8").splitlines()) == 20


def test_solve_and_evaluate(data_file, tmp_path, capsys):
    rw, on = tmp_path / "rw.jsonl", tmp_path / "always_on.jsonl"
    assert main.main(["solve", "--solver", "rw", "--data", str(data_file), "--out", str(rw), "--workers", "1"]) == 0
    assert main.main(["solve", "--solver", "always_on", "--data", str(data_file), "--out", str(on)]) == 0
    assert len(read_predictions(rw)) == 20

    report = tmp_path / "report"
    code = main.main(["evaluate", "--data", str(data_file), "--pred", str(rw), "--pred", f"on={on}", "--report", str(report)])
    assert code == 0
    summary = json.loads(report.with_suffix(".json").read_text(encoding="utf-8"))
    assert set(summary["entries"]["iid"]) == {"rw", "on"}
    assert "Qry." in capsys.readouterr().out


def test_calibrate_writes_config(data_file, tmp_path):
    out = tmp_path / "rw.json"
    assert main.main(["calibrate", "--solver", "rw", "--data", str(data_file), "--out", str(out), "--workers", "1"]) == 0
    config = json.loads(out.read_text(encoding="utf-8"))
    assert set(config) == {"rw", "pc", "opt"}
    pred = tmp_path / "pred.jsonl"
    assert main.main(["solve", "--solver", "rw", "--data", str(data_file), "--out", str(pred), "--config", str(out)]) == 0


def test_inspect(data_file, capsys):
    assert main.main(["inspect", "--data", str(data_file), "--problem", "iid-00000", "--stats"]) == 0
    out = capsys.readouterr().out
    assert "iid-00000" in out
    assert "validation: ok" in out
    assert "labels:" in out


def test_inspect_needs_problem_or_stats(data_file, capsys):
    with pytest.raises(SystemExit) as exc:
        main.main(["inspect", "--data", str(data_file)])
    assert exc.value.code == 2
    assert "--problem" in capsys.readouterr().err


def test_exit_codes(data_file, tmp_path):
    bad_config = tmp_path / "bad.json"
    bad_config.write_text('{"rw": {"theta": 0.5, "thetaa": 1}}', encoding="utf-8")
    out = tmp_path / "p.jsonl"
    assert main.main(["solve", "--solver", "rw", "--data", str(data_file), "--out", str(out), "--config", str(bad_config)]) == 2

    assert main.main(["inspect", "--data", str(data_file), "--problem", "nope"]) == 1

    stray = tmp_path / "stray.jsonl"
    stray.write_text('{"problem_id":"other-1","labels":["activated","activated","activated","activated"]}\n', encoding="utf-8")
    assert main.main(["evaluate", "--data", str(data_file), "--pred", str(stray)]) == 1
