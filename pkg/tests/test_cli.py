import csv
import json

import numpy as np
import pytest

from oneshot.cli import EXIT_CHECK, EXIT_GUARD, EXIT_INVALID, EXIT_OK, fmt, main


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_toy_solve_matches_greedy_values(tmp_path, capsys):
    cfg = write(tmp_path, "toy.json", {"model": "toy", "gamma": 0.5, "iterations": 3, "operator": "greedy"})
    assert main(["solve", "--config", cfg]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    # V3(1) is the greedy pick {3} with Q = 11.75
    assert out["result"]["values"][0] == 11.75
    assert out["result"]["policy"][0] == [3]
    assert out["manifest"]["config"]["iterations"] == 3


def test_solve_policy_round_trip(tmp_path):
    model = {"num_types": 2, "num_items": 2, "scores": [[0.9, 0.1], [0.2, 0.7]], "termination_scores": [0.5, 0.5]}
    cfg = write(tmp_path, "m.json", {"model": model, "k": 1, "resolution": 4, "gamma": 0.9, "iterations": 5})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--format", "csv"]) == EXIT_OK
    text = (tmp_path / "o" / "solve.csv").read_text().splitlines()
    assert text[0].startswith("# manifest ")
    rows = list(csv.DictReader(text[1:]))
    assert len(rows) == 5
    states = [[float(x) for x in r["state"].split()] for r in rows]
    assert np.allclose(np.sum(states, axis=1), 1)
    assert all(r["action"] in ("0", "1") for r in rows)
    manifest = json.loads((tmp_path / "o" / "solve.manifest.json").read_text())
    assert manifest["runtime_s"] >= 0 and manifest["config"]["model"] == model


def test_oversized_action_space_is_guard_error(tmp_path, capsys):
    model = {"num_types": 2, "num_items": 40, "scores": [[0.5] * 40] * 2, "termination_scores": [1, 1]}
    cfg = write(tmp_path, "big.json", {"model": model, "k": 12, "resolution": 2})
    assert main(["solve", "--config", cfg]) == EXIT_GUARD
    assert "guard" in capsys.readouterr().err


def test_validation_errors(tmp_path):
    assert main(["simulate", "--config", write(tmp_path, "z.json", {"sessions": 0})]) == EXIT_INVALID
    assert main(["solve", "--config", write(tmp_path, "u.json", {"nonsense": 1})]) == EXIT_INVALID
    assert main(["net-info", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID
    assert main(["check", "no_such_suite"]) == EXIT_INVALID


def test_simulate_same_seed_same_bytes(tmp_path, monkeypatch):
    cfg = write(
        tmp_path,
        "s.json",
        {"num_types": 2, "num_items": 6, "k": 2, "resolution": 3, "repetitions": 2, "sessions": 300, "vi_iterations": [2],
         "affine_per_type": None},
    )
    monkeypatch.setenv("ONESHOT_THREADS", "2")
    for d in ("a", "b"):
        assert main(["simulate", "--config", cfg, "--seed", "7", "--format", "csv", "--out", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "simulate.csv").read_bytes()
    assert a == (tmp_path / "b" / "simulate.csv").read_bytes()
    main(["simulate", "--config", cfg, "--seed", "8", "--format", "csv", "--out", str(tmp_path / "c")])
    assert a != (tmp_path / "c" / "simulate.csv").read_bytes()
    lines = a.decode().splitlines()
    assert json.loads(lines[0][len("# manifest "):])["seed"] == 7
    summary = [r for r in csv.DictReader(lines[1:]) if r["repetition"] == "all"]
    assert {r["arm"] for r in summary} == {"random", "optimal", "greedy", "simple_greedy"}


def test_counterexample_reports_eight_rows(capsys):
    code = main(["counterexample"])
    rows = json.loads(capsys.readouterr().out)["result"]["rows"]
    assert len(rows) == 8
    # the two reference optimal-value numbers disagree with the brute-force optimum
    assert code == EXIT_CHECK
    assert [r["passed"] for r in rows].count(False) == 2


def test_check_suites_pass(capsys):
    assert main(["check", "iia", "nemhauser", "--seed", "1"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["passed"] and [s["suite"] for s in out["result"]["suites"]] == ["iia", "nemhauser"]


def test_net_info_and_nine_digits(capsys):
    assert main(["net-info", "--config", "/dev/null"]) == EXIT_INVALID
    capsys.readouterr()
    assert main(["net-info"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["result"] == {"points": 286, "covering_radius": 0.2}
    assert fmt({"x": [1 / 3, np.float64(2 / 3)]}) == {"x": [0.333333333, 0.666666667]}


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("ONESHOT_THREADS", "zero")
    assert main(["net-info"]) == EXIT_INVALID
