import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from community_forge.cli import load_schema, main
from community_forge.presets import CANONICAL


def _config(tmp_path, **params):
    raw = {"params": {**CANONICAL.to_dict(), **params}, "seed": 0}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return str(path)


@pytest.fixture(scope="module")
def constructed(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = _config(out)
    assert main(["construct", "--config", cfg, "--out", str(out)]) == 0
    return cfg, out


def test_construct_outputs(constructed):
    _, out = constructed
    doc = json.loads((out / "structure.json").read_text())
    jsonschema.validate(doc, load_schema("structure"))
    assert doc["K"] == 17
    assert doc["arc_length"] == pytest.approx(2 / 17)
    assert len(list((out / "communities").glob("*_production.csv"))) == 17


def test_verify_pass(constructed, tmp_path):
    cfg, out = constructed
    assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--structure", str(out / "structure.json")]) == 0
    report = json.loads((tmp_path / "nash_report.json").read_text())
    jsonschema.validate(report, load_schema("nash_report"))
    assert report["pass"] is True


def test_verify_tampered_fails(constructed, tmp_path):
    cfg, out = constructed
    doc = json.loads((out / "structure.json").read_text())
    c = doc["communities"][2]
    first = dict(c, length=0.3 * c["length"])
    second = dict(c, start=c["start"] + 0.3 * c["length"], length=0.7 * c["length"])
    doc["communities"][2:3] = [first, second]
    doc["K"] += 1
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc))
    assert main(["verify", "--config", cfg, "--out", str(tmp_path), "--structure", str(bad)]) == 1
    assert json.loads((tmp_path / "nash_report.json").read_text())["pass"] is False


def test_filter_analysis(constructed, tmp_path):
    cfg, out = constructed
    assert main(["filter-analysis", "--config", cfg, "--out", str(tmp_path), "--structure", str(out / "structure.json")]) == 0
    doc = json.loads((tmp_path / "filter_analysis.json").read_text())
    jsonschema.validate(doc, load_schema("filter_analysis"))
    jsonschema.validate(doc["expert_plan"], load_schema("expert_plan"))
    for entry in doc["optimal_filter_agents"]:
        assert entry["distance_to_mid"] <= entry["grid_step"]
    assert doc["threshold"]["relative_difference"] < 1e-6
    assert doc["expert_plan"]["delta_total"] >= 0
    header = (tmp_path / "expert_gains.csv").read_text().splitlines()[0]
    assert header == "y,gain,P_at_xstar,q_at_xstar"


def test_profile_dumps_grids(constructed, tmp_path):
    cfg, out = constructed
    assert main(["profile", "--config", cfg, "--out", str(tmp_path), "--structure", str(out / "structure.json")]) == 0
    heads = {p.name: p.read_text().splitlines()[0] for p in tmp_path.glob("profile_*.csv")}
    assert heads == {
        "profile_demand.csv": "x,P(x)",
        "profile_production.csv": "y,x_star,objective,gate_rate",
        "profile_utility.csv": "y,U_d,U_s",
        "profile_supply.csv": "x,Q_star(x),flagged",
    }


def test_c_sweep(tmp_path):
    cfg = _config(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--param", "c", "--start", "0", "--stop", "0.8991", "--steps", "20"]) == 0
    rows = list(csv.DictReader((tmp_path / "sweep_c.csv").open()))
    assert len(rows) == 20
    bound = [float(r["max_interval_length"]) for r in rows]
    assert all(b2 <= b1 for b1, b2 in zip(bound, bound[1:]))
    assert bound[-1] < 0.05
    assert all(float(r["expert_delta_total"]) >= 0 for r in rows)
    assert all(float(r["arc_length"]) <= float(r["max_interval_length"]) for r in rows)


def test_zero_length_sweep_is_one_row(tmp_path):
    cfg = _config(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--param", "g.width", "--start", "0.3", "--stop", "0.3"]) == 0
    assert len((tmp_path / "sweep_g.width.csv").read_text().splitlines()) == 2


def test_sweep_past_feasibility_marks_rows(tmp_path):
    cfg = _config(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--param", "c", "--start", "0.85", "--stop", "1.0", "--steps", "4"]) == 0
    rows = list(csv.DictReader((tmp_path / "sweep_c.csv").open()))
    assert [r["feasible"] for r in rows] == ["true", "false", "false", "false"]


@pytest.mark.parametrize(
    "argv, code",
    [
        (["sweep", "--param", "L", "--start", "0", "--stop", "1"], 64),
        (["sweep", "--param", "c", "--start", "0", "--stop", "1", "--steps", "0"], 64),
        (["construct", "--bogus"], 64),
        (["teleport"], 64),
        (["construct", "--grid", "16"], 64),
        (["verify", "--structure", "does/not/exist.json"], 66),
        (["construct", "--config", "does/not/exist.json"], 66),
    ],
)
def test_usage_and_missing_input_codes(tmp_path, argv, code):
    argv = argv + ["--out", str(tmp_path)] if argv[0] != "teleport" else argv
    try:
        rc = main(argv)
    except SystemExit as exc:
        rc = exc.code
    assert rc == code


def test_infeasible_cost_exits_2(tmp_path, capsys):
    cfg = _config(tmp_path, c=1.5)
    assert main(["construct", "--config", cfg, "--out", str(tmp_path)]) == 2
    diag = json.loads((tmp_path / "diagnosis.json").read_text())
    assert diag["diagnosis"]["max_interval_length"] == 0.0


def test_missing_field_exits_64(tmp_path):
    raw = {"params": CANONICAL.to_dict()}
    del raw["params"]["E_q"]
    (tmp_path / "c.json").write_text(json.dumps(raw))
    assert main(["construct", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 64


def test_malformed_json_exits_64(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert main(["construct", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 64


def test_inadmissible_kernel_exits_64(tmp_path):
    cfg = _config(tmp_path, g={"family": "gaussian", "amplitude": 0.9, "width": 0.3})
    # parses fine, fails kernel admissibility during construction
    assert main(["construct", "--config", cfg, "--out", str(tmp_path)]) == 64


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_every_command_is_byte_deterministic(tmp_path):
    cfg = _config(tmp_path)
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["construct", "--config", cfg, "--out", str(out)]) == 0
        assert main(["verify", "--config", cfg, "--out", str(out), "--seed", "5", "--n-agents", "60"]) == 0
        assert main(["filter-analysis", "--config", cfg, "--out", str(out)]) == 0
        assert main(["profile", "--config", cfg, "--out", str(out), "--community", "4"]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(out), "--param", "f.width", "--start", "0.2", "--stop", "0.4", "--steps", "3"]) == 0
        runs.append(_snapshot(out))
    assert runs[0].keys() == runs[1].keys()
    assert runs[0] == runs[1]


def test_entry_point_runs(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "community_forge.cli", "sweep", "--param", "c", "--start", "0.1", "--stop", "0.1", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "sweep_c.csv").is_file()
