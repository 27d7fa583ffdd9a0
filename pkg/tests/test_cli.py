import json
import subprocess
import sys

import pytest

from sparse_exchange.cli import main

SCENARIO = {
    "schema": 1,
    "n": 6,
    "endowments": {"lognormal": {"mu_log": 4.5, "sigma_sq": 0.25, "seed": 5}},
    "init": {"mode": "random", "seed": 1},
    "run": {"algorithm": "sparse", "max_iters": 400, "conv_tol": 1e-10},
    "params": {"c": 0.1, "eps": 0.01, "tau": 0.01},
}


def _write_scenario(tmp_path, doc=None):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc or SCENARIO))
    return str(path)


def test_run_outputs(tmp_path):
    scen = _write_scenario(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--scenario", scen, "--out", str(out)]) == 0
    metrics = (out / "metrics.csv").read_text().splitlines()
    assert metrics[0] == "t,cardinality,reciprocity,min_ratio,d_ra,d_ar,step_delta"
    assert len(metrics) >= 2
    doc = json.loads((out / "allocation.json").read_text())
    assert doc["schema"] == 1 and doc["algorithm"] == "sparse"
    assert len(doc["allocation"]) == 6 and len(doc["endowments"]) == 6
    col0 = sum(row[0] for row in doc["allocation"])
    assert abs(col0 - doc["endowments"][0]) <= 1e-9 * doc["endowments"][0]
    dot = (out / "graph.dot").read_text()
    assert dot.startswith("digraph exchange {") and "->" in dot


def test_run_byte_determinism(tmp_path):
    scen = _write_scenario(tmp_path)
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    main(["run", "--scenario", scen, "--out", str(out1)])
    main(["run", "--scenario", scen, "--out", str(out2)])
    for name in ("metrics.csv", "allocation.json", "graph.dot"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_ensemble_serial_parallel_identical(tmp_path):
    scen = _write_scenario(tmp_path)
    ser, par = tmp_path / "ser", tmp_path / "par"
    assert main(["ensemble", "--scenario", scen, "--out", str(ser),
                 "--runs", "4", "--seed", "3"]) == 0
    assert main(["ensemble", "--scenario", scen, "--out", str(par),
                 "--runs", "4", "--seed", "3", "--jobs", "2"]) == 0
    for name in ("ensemble.csv", "summary.csv"):
        assert (ser / name).read_bytes() == (par / name).read_bytes()
    rows = (ser / "ensemble.csv").read_text().splitlines()
    assert rows[0] == "seed,cardinality,reciprocity,min_ratio,d_ra"
    assert [r.split(",")[0] for r in rows[1:]] == ["3", "4", "5", "6"]
    summary = (ser / "summary.csv").read_text().splitlines()
    assert summary[0] == "metric,mean,median,std"
    assert [r.split(",")[0] for r in summary[1:]] == [
        "cardinality", "reciprocity", "min_ratio", "d_ra"]


def test_sweep(tmp_path):
    scen = _write_scenario(tmp_path)
    out = tmp_path / "sweep"
    assert main(["sweep", "--scenario", scen, "--out", str(out),
                 "--c-grid", "0.01,0.3"]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "c,cardinality,d_ra,min_ratio,iterations"
    cards = [int(r.split(",")[1]) for r in rows[1:]]
    # heavier penalty prunes at least as many links
    assert cards[1] <= cards[0]


def _write_endowments(tmp_path, values):
    path = tmp_path / "endow.json"
    path.write_text(json.dumps({"endowments": values}))
    return str(path)


def test_solve_p0(tmp_path):
    endow = _write_endowments(tmp_path, [1.0, 1.0, 1.0, 1.0])
    out = tmp_path / "sol"
    assert main(["solve", "--endowments", endow, "--theta", "1.0",
                 "--method", "p0", "--out", str(out)]) == 0
    doc = json.loads((out / "solution.json").read_text())
    assert doc["feasible"] is True
    assert doc["cardinality"] == 4
    assert doc["residuals"]["max_column_error"] <= 1e-9
    assert doc["residuals"]["min_ratio"] >= 1.0 - 1e-9


def test_solve_p2_and_infeasible(tmp_path):
    endow = _write_endowments(tmp_path, [1.0, 2.0, 1.5, 1.2, 0.8])
    out = tmp_path / "sol2"
    assert main(["solve", "--endowments", endow, "--theta", "0.9",
                 "--method", "p2", "--out", str(out)]) == 0
    doc = json.loads((out / "solution.json").read_text())
    assert doc["feasible"] is True and doc["objective_trace"]
    # a peer holding more than everyone else combined cannot reach ratio 1
    endow = _write_endowments(tmp_path, [10.0, 1.0, 1.0])
    out = tmp_path / "sol3"
    assert main(["solve", "--endowments", endow, "--theta", "1.0",
                 "--method", "p1", "--out", str(out)]) == 0
    doc = json.loads((out / "solution.json").read_text())
    assert doc["feasible"] is False and "error" in doc


def test_bad_inputs_exit_2(tmp_path, capsys):
    scen = _write_scenario(tmp_path)
    assert main(["ensemble", "--scenario", scen, "--out", str(tmp_path / "x"),
                 "--runs", "0"]) == 2
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "y")]) == 2
    err = capsys.readouterr().err
    assert "line" in err


def test_console_entry_point(tmp_path):
    scen = _write_scenario(tmp_path)
    out = tmp_path / "sub"
    proc = subprocess.run(
        [sys.executable, "-m", "sparse_exchange.cli", "run",
         "--scenario", scen, "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "metrics.csv").exists()


def test_solve_endowment_file_validation(tmp_path, capsys):
    path = tmp_path / "endow.json"
    path.write_text(json.dumps({"endowments": [1.0, -1.0, 1.0]}))
    assert main(["solve", "--endowments", str(path), "--theta", "0.9",
                 "--method", "p0", "--out", str(tmp_path / "s")]) == 2
    assert "error:" in capsys.readouterr().err
    path.write_text(json.dumps({"wrong_key": [1.0, 1.0]}))
    assert main(["solve", "--endowments", str(path), "--theta", "0.9",
                 "--method", "p0", "--out", str(tmp_path / "s")]) == 2
