import csv
import io
import json
import subprocess
import sys
from importlib.resources import files

import pytest

from dwelltour.cli import main, parse_epsilons, _split_spacings, UsageError

MISSIONS = files("dwelltour") / "missions"
T1 = str(MISSIONS / "table1.json")
T3 = str(MISSIONS / "table3.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_helpers():
    assert parse_epsilons("0:10:3") == [0.0, 5.0, 10.0]
    assert parse_epsilons("7:9:1") == [7.0]
    assert parse_epsilons("1.5,2,3") == [1.5, 2.0, 3.0]
    with pytest.raises(UsageError):
        parse_epsilons("1:2")
    assert _split_spacings("condition1,condition3") == ["condition1", "condition3"]
    assert _split_spacings("dr=100,dtheta=0.5,dalpha=0.5,condition2") == ["dr=100,dtheta=0.5,dalpha=0.5", "condition2"]


def test_plan_json_to_file(tmp_path, capsys):
    out = tmp_path / "plan.json"
    svg = tmp_path / "plan.svg"
    code, stdout, _ = run(capsys, "plan", "--mission", T3, "--spacing", "condition3", "--epsilon", "400",
                          "--out", str(out), "--svg", str(svg))
    assert code == 0
    doc = json.loads(out.read_text())
    summary = json.loads(stdout)
    assert summary["command"] == "plan" and summary["outcome"] == "ok" and "wall_time" in summary["metrics"]
    assert doc["totals"]["initial_time_s"] <= 400
    legs = sum(l["dubins_s"] + l["dwell_s"] for l in doc["legs"])
    assert legs == pytest.approx(doc["totals"]["closed_time_s"], abs=1e-6)
    assert doc["closed_route"][0] == doc["closed_route"][-1]
    assert [s["target_id"] for s in doc["sequence"]][0] == doc["first_target"]
    assert set(doc["node_counts"]) == {"T1", "T2"}
    assert svg.read_text().lstrip().startswith("<?xml")


def test_plan_json_on_stdout_summary_on_stderr(capsys):
    code, stdout, stderr = run(capsys, "plan", "--mission", T3, "--spacing", "condition1", "--epsilon", "400")
    assert code == 0
    assert "closed_route" in json.loads(stdout)
    assert json.loads(stderr.strip().splitlines()[-1])["command"] == "plan"


def test_exit_discrete_infeasible(capsys):
    code, _, err = run(capsys, "plan", "--mission", T3, "--spacing", "condition3", "--epsilon", "16.26")
    assert code == 2
    assert "Discrete Approximation Infeasible" in err and "nearest achievable start time" in err


def test_exit_usage_missing_azimuth(tmp_path, capsys):
    doc = json.loads(open(T1).read())
    doc["targets"][1].pop("azimuth_rad")
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(capsys, "plan", "--mission", str(p), "--epsilon", "100")
    assert code == 1
    assert "targets[1].azimuth_rad" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["plan", "--mission", T3],
        ["plan", "--mission", T3, "--epsilon", "-1"],
        ["plan", "--mission", "/nonexistent.json", "--epsilon", "1"],
        ["plan", "--mission", T3, "--epsilon", "1", "--spacing", "condition9"],
        ["plan", "--mission", T3, "--epsilon", "1", "--policy", "target:T7"],
        ["pareto", "--mission", T3, "--epsilons", "1:2"],
        ["frobnicate"],
    ],
)
def test_exit_usage(argv, capsys):
    with pytest.raises(SystemExit) as e:
        sys.exit(main(argv))
    assert e.value.code == 1


def test_exit_mission_infeasible(tmp_path, capsys):
    doc = json.loads(open(T3).read())
    doc["targets"][0]["behavior"] = "FULL"
    doc["targets"][0]["loops"] = 2
    doc["targets"][0]["tilt_rad"] = [1.2, 1.3]
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(capsys, "plan", "--mission", str(p), "--epsilon", "100")
    assert code == 3 and "T1" in err


def test_pareto_csv(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, stdout, _ = run(capsys, "pareto", "--mission", T3, "--spacing", "condition1,condition3",
                          "--epsilons", "0:600:5", "--csv", str(out), "--effort", "fast")
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["spacing", "epsilon", "initial_time", "closed_time_raw", "closed_time_envelope"]
    assert len(rows) == 10
    for label in ("condition1", "condition3"):
        env = [float(r["closed_time_envelope"]) for r in rows if r["spacing"] == label and r["closed_time_envelope"]]
        assert env and all(b <= a for a, b in zip(env, env[1:]))
    assert rows[0]["initial_time"] == ""  # epsilon 0 is unreachable
    assert json.loads(stdout)["metrics"]["feasible_runs"] > 0


def test_pareto_single_epsilon_and_all_infeasible(capsys):
    code, stdout, _ = run(capsys, "pareto", "--mission", T3, "--spacing", "condition1", "--epsilons", "500")
    assert code == 0
    rows = list(csv.reader(io.StringIO(stdout)))
    assert len(rows) == 2 and rows[1][1] == "500.0"
    code, stdout, _ = run(capsys, "pareto", "--mission", T3, "--spacing", "condition1", "--epsilons", "1,2")
    assert code == 2
    rows = list(csv.reader(io.StringIO(stdout)))
    assert all(r[2] == "" for r in rows[1:])


def test_converge_without_reference(capsys):
    code, stdout, _ = run(capsys, "converge", "--mission", T3, "--spacing", "condition1,condition2", "--epsilon", "400")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(stdout)))
    assert [r["condition"] for r in rows] == ["condition1", "condition2"]
    assert all(r["relative_error"] == "" and r["outcome"] == "ok" for r in rows)


def test_converge_all_infeasible(capsys):
    code, stdout, _ = run(capsys, "converge", "--mission", T3, "--spacing", "condition1", "--epsilon", "16.26")
    assert code == 2
    assert "infeasible-discrete" in stdout


def test_compare_greedy_single_target(tmp_path, capsys):
    doc = json.loads(open(T3).read())
    doc["targets"] = doc["targets"][1:]
    p = tmp_path / "one.json"
    p.write_text(json.dumps(doc))
    code, stdout, _ = run(capsys, "compare-greedy", "--mission", str(p), "--spacing", "condition3", "--loops-sweep", "0,1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(stdout)))
    assert [r["tau"] for r in rows] == ["0", "1"]
    assert all(float(r["gap"]) == 0.0 for r in rows)


def test_repeatable_outputs(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"plan{k}.json"
        subprocess.run([sys.executable, "-m", "dwelltour", "plan", "--mission", T3, "--spacing", "condition3",
                        "--epsilon", "400", "--out", str(out)], check=True, capture_output=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
