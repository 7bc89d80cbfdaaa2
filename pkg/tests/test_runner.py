import json
from fractions import Fraction as Fr

import pytest

from ffkit import cli
from ffkit.runner import (
    REGISTRY,
    Options,
    ScenarioError,
    TaskResult,
    bundled_scenarios,
    emit,
    exit_code,
    function_json,
    load_scenario,
    parse_machine,
    resolve_seed,
    run,
    scenario_from_json,
    step_json,
)
from ffkit.torus import PeriodicStepFunction

from conftest import journe_psi

MINIMAL = {
    "dilation": {"d": 1, "M": [[2]]},
    "functions": {"psi": [{"interval_pi": ["-2", "-1"], "re": "1"}, {"interval_pi": ["1", "2"], "re": "1"}]},
    "tasks": [{"task": "vminus", "args": {"psi": ["psi"]}}],
}


def write(tmp_path, obj, name="s.scenario"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def test_bundled_names():
    assert bundled_scenarios() == ["bspline2", "haar", "journe", "quincunx", "shannon"]


def test_load_journe():
    sc = load_scenario("journe")
    assert len(sc.functions) == 1 and len(sc.tasks) == 3
    assert sc.functions["psi"] == journe_psi()
    assert sc.M == 2


def test_reversed_interval(tmp_path):
    bad = json.loads(json.dumps(MINIMAL))
    bad["functions"]["psi"][0]["interval_pi"] = ["1", "4/7"]
    with pytest.raises(ScenarioError, match="empty interval"):
        load_scenario(write(tmp_path, bad))


def test_unknown_task_lists_registry(tmp_path):
    bad = dict(MINIMAL, tasks=[{"task": "frobnicate"}])
    with pytest.raises(ScenarioError) as exc:
        load_scenario(write(tmp_path, bad))
    assert "frobnicate" in str(exc.value)
    assert all(name in str(exc.value) for name in REGISTRY)


def test_undefined_reference():
    bad = dict(MINIMAL, tasks=[{"task": "vminus", "args": {"psi": ["nope"]}}])
    with pytest.raises(ScenarioError, match="undefined function 'nope'"):
        scenario_from_json(bad)
    bad = dict(MINIMAL, tasks=[{"task": "check-fb-orthogonal", "args": {"low": "a", "high": "b"}}])
    with pytest.raises(ScenarioError, match="undefined filter"):
        scenario_from_json(bad)


def test_malformed_json_position(tmp_path):
    with pytest.raises(ScenarioError, match=r"line 2 column"):
        load_scenario(write(tmp_path, '{\n  "dilation": ,\n}'))


def test_bad_expect_and_missing_fields():
    with pytest.raises(ScenarioError, match="expect"):
        scenario_from_json(dict(MINIMAL, tasks=[{"task": "vminus", "args": {"psi": ["psi"]}, "expect": "MAYBE"}]))
    with pytest.raises(ScenarioError, match="missing field 'tasks'"):
        scenario_from_json({"dilation": 2})
    with pytest.raises(ScenarioError, match="dilation"):
        scenario_from_json(dict(MINIMAL, dilation={"d": 1, "M": [[1]]}))


def test_duplicate_ids_made_unique():
    sc = scenario_from_json(dict(MINIMAL, tasks=MINIMAL["tasks"] * 2))
    assert [t.id for t in sc.tasks] == ["vminus", "vminus#2"]


def test_emit_text_contract():
    res = TaskResult("verify-tight", "verify-tight", "PASS", 3.2e-10)
    assert emit([res]) == "CHECK verify-tight PASS residual=3.200000e-10\n"
    assert emit([]) == ""
    assert json.loads(emit([], "machine")) == []
    with pytest.raises(ValueError):
        emit([res], "xml")


def test_step_payload_is_rational():
    f = PeriodicStepFunction((Fr(-1), Fr(-2, 7)), (0, 2))
    payload = step_json(f)
    assert payload["breakpoints"] == ["-1/1", "-2/7", "1/1"]
    assert payload["values"] == [["0/1", "0/1"], ["2/1", "0/1"]]
    payload = function_json(journe_psi())
    assert payload["breakpoints"][0] == "-32/7"
    assert len(payload["breakpoints"]) == len(payload["values"]) + 1


def test_machine_round_trip():
    results = run(load_scenario("shannon"), Options(seed=7))
    text = emit(results, "machine")
    back = parse_machine(text)
    assert [r.to_json() for r in back] == [r.to_json() for r in results]
    assert all(r["timing"] is None for r in json.loads(text))
    timed = json.loads(emit(results, "machine", timing=True))
    assert all(isinstance(r["timing"], float) for r in timed)


def test_error_becomes_error_verdict():
    sc = scenario_from_json(dict(MINIMAL, functions={"bad": [{"interval_pi": ["-1", "1"], "re": "1"}]},
                                 tasks=[{"task": "vminus", "args": {"psi": ["bad"]}}]))
    res = run(sc)
    assert res[0].verdict == "ERROR" and res[0].residual == float("inf")
    assert exit_code(res) == 1
    assert json.loads(emit(res, "machine"))[0]["residual"] == "inf"


def test_expect_semantics():
    tasks = [{"task": "vminus", "args": {"psi": ["psi"]}, "expect": "FAIL"}]
    res = run(scenario_from_json(dict(MINIMAL, tasks=tasks)))
    assert res[0].verdict == "FAIL"
    assert "observed PASS, expected FAIL" in res[0].details


def test_seed_precedence(monkeypatch):
    sc = load_scenario("journe")
    monkeypatch.delenv("FF_SEED", raising=False)
    assert resolve_seed(None, sc) == 2024
    monkeypatch.setenv("FF_SEED", "9")
    assert resolve_seed(None, sc) == 9
    assert resolve_seed(3, sc) == 3
    sc.seed = None
    monkeypatch.delenv("FF_SEED")
    assert resolve_seed(None, sc) == 0


def test_cli_run_validate_list(capsys, tmp_path):
    assert cli.main(["validate", "journe"]) == 0
    assert "OK journe" in capsys.readouterr().out
    assert cli.main(["list"]) == 0
    assert "journe" in capsys.readouterr().out
    assert cli.main(["run", "haar"]) == 0
    out = capsys.readouterr().out
    assert "CHECK check-fb-orthogonal PASS residual=0.000000e+00" in out
    assert cli.main(["run", write(tmp_path, "{")]) == 2
    assert "error:" in capsys.readouterr().err
    bad = dict(MINIMAL, tasks=[{"task": "vminus", "args": {"psi": ["psi"]}, "expect": "FAIL"}])
    assert cli.main(["run", write(tmp_path, bad, "b.scenario")]) == 1


def test_cli_machine_reproducible(capsys):
    cli.main(["run", "journe", "--format", "machine", "--seed", "5"])
    first = capsys.readouterr().out
    cli.main(["run", "journe", "--format", "machine", "--seed", "5", "--jobs", "3"])
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("name", ["journe", "shannon", "quincunx"])
def test_bundled_scenarios_pass(name):
    sc = load_scenario(name)
    res = run(sc, Options(seed=resolve_seed(None, sc)))
    assert exit_code(res) == 0, [(r.id, r.verdict, r.details) for r in res if r.verdict != "PASS"]
