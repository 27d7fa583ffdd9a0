"""Command-line experiment harness.

Subcommands:

* ``run``      one scenario -> metrics.csv, allocation.json, graph.dot
* ``ensemble`` R random-init runs of one scenario -> ensemble.csv, summary.csv
* ``sweep``    one scenario across a grid of penalty weights c -> sweep.csv
* ``solve``    centralized baselines on an endowment file -> solution.json

CSV floats are written with repr (shortest round-trip form) and files are
written atomically, so identical scenarios and seeds reproduce every output
byte-for-byte. The CLI adds no randomness of its own: every draw comes from
a seed named in the scenario file or on the command line.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import central
from .dynamics import run as run_dynamics
from .market import cardinality, link_mask, min_exchange_ratio
from .scenario import ScenarioSpec, load_scenario
from .validation import check_endowments

METRICS_HEADER = "t,cardinality,reciprocity,min_ratio,d_ra,d_ar,step_delta"
ENSEMBLE_HEADER = "seed,cardinality,reciprocity,min_ratio,d_ra"
SWEEP_HEADER = "c,cardinality,d_ra,min_ratio,iterations"


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(value) -> str:
    """Full-precision, round-trippable cell formatting."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _csv(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------------ run


def _dot_graph(X, a, tau: float) -> str:
    mask = link_mask(X, a, tau)
    n = a.size
    lines = ["digraph exchange {"]
    for i in range(n):
        lines.append(f'  {i} [label="a={a[i]:.2f}"];')
    for j in range(n):  # giver -> receiver
        for i in range(n):
            if mask[i, j]:
                lines.append(f'  {j} -> {i} [label="{X[i, j]:.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _allocation_doc(spec: ScenarioSpec, state) -> dict:
    return {
        "schema": 1,
        "algorithm": spec.run.algorithm,
        "endowments": [float(v) for v in state.a],
        "allocation": [[float(v) for v in row] for row in state.X],
        "params": {"c": spec.params.c, "eps": spec.params.eps, "tau": spec.params.tau},
        "seed": spec.init.seed,
        "init": spec.init.mode,
        "iterations": state.t,
    }


def cmd_run(scenario_path: str, out_dir: str) -> int:
    spec = load_scenario(scenario_path)
    state, records = run_dynamics(spec.build_state(), spec.run)
    os.makedirs(out_dir, exist_ok=True)
    rows = [
        (m.t, m.cardinality, m.reciprocity, m.min_ratio, m.d_ra, m.d_ar, m.step_delta)
        for m in records
    ]
    _write_atomic(os.path.join(out_dir, "metrics.csv"), _csv(METRICS_HEADER, rows))
    _write_atomic(
        os.path.join(out_dir, "allocation.json"),
        json.dumps(_allocation_doc(spec, state), indent=2) + "\n",
    )
    _write_atomic(
        os.path.join(out_dir, "graph.dot"), _dot_graph(state.X, state.a, spec.params.tau)
    )
    return 0


# ------------------------------------------------------------------- ensemble


def _ensemble_member(job):
    """One seeded random-init run; returns (seed, metrics tuple or error string)."""
    spec, seed = job
    try:
        member = spec.with_init_seed(seed)
        state, records = run_dynamics(member.build_state(), member.run)
        m = records[-1]
        return seed, (m.cardinality, m.reciprocity, m.min_ratio, m.d_ra), None
    except Exception as e:  # per-run failures must not kill the ensemble
        return seed, None, f"{type(e).__name__}: {e}"


def cmd_ensemble(scenario_path: str, out_dir: str, runs: int, seed0: int, jobs: int = 1) -> int:
    if runs < 1:
        raise ValueError("--runs must be at least 1")
    spec = load_scenario(scenario_path)
    jobs = max(1, jobs)
    work = [(spec, seed0 + k) for k in range(runs)]
    if jobs == 1:
        results = [_ensemble_member(job) for job in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ensemble_member, work))
    results.sort(key=lambda item: item[0])

    os.makedirs(out_dir, exist_ok=True)
    ok = [(seed, *vals) for seed, vals, err in results if err is None]
    failures = [(seed, err) for seed, vals, err in results if err is not None]
    _write_atomic(os.path.join(out_dir, "ensemble.csv"), _csv(ENSEMBLE_HEADER, ok))

    names = ("cardinality", "reciprocity", "min_ratio", "d_ra")
    summary_rows = []
    for col, name in enumerate(names, start=1):
        vals = np.array([row[col] for row in ok], dtype=float)
        if vals.size:
            summary_rows.append((name, vals.mean(), float(np.median(vals)), vals.std()))
        else:
            summary_rows.append((name, float("nan"), float("nan"), float("nan")))
    _write_atomic(
        os.path.join(out_dir, "summary.csv"), _csv("metric,mean,median,std", summary_rows)
    )
    if failures:
        lines = "".join(f"{seed},{err}\n" for seed, err in failures)
        _write_atomic(os.path.join(out_dir, "errors.csv"), "seed,error\n" + lines)
        print(f"{len(failures)} of {runs} runs failed; see errors.csv", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------- sweep


def cmd_sweep(scenario_path: str, out_dir: str, c_grid) -> int:
    if not c_grid:
        raise ValueError("--c-grid must list at least one value")
    spec = load_scenario(scenario_path)
    rows = []
    for c in c_grid:
        member = spec.with_c(c)
        state, records = run_dynamics(member.build_state(), member.run)
        m = records[-1]
        rows.append((float(c), m.cardinality, m.d_ra, m.min_ratio, state.t))
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(os.path.join(out_dir, "sweep.csv"), _csv(SWEEP_HEADER, rows))
    return 0


# ---------------------------------------------------------------------- solve


def _load_endowments(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(
                f"{path}: invalid endowment file at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
    if isinstance(doc, dict):
        if set(doc) != {"endowments"}:
            raise ValueError(f"{path}: expected a JSON list or {{'endowments': [...]}}")
        doc = doc["endowments"]
    return check_endowments(np.asarray(doc, dtype=float))


def cmd_solve(endowments_path: str, out_dir: str, theta: float, method: str) -> int:
    a = _load_endowments(endowments_path)
    os.makedirs(out_dir, exist_ok=True)
    doc = {"schema": 1, "method": method, "theta": theta,
           "endowments": [float(v) for v in a]}
    try:
        if method == "p0":
            card, X = central.p0_brute_force(a, theta, max_n=5)
            trace = None
        elif method == "p1":
            X, trace = central.p1_reweighted_lp(a, theta)
        elif method == "p2":
            X, trace = central.p2_irls(a, theta)
        else:
            raise ValueError(f"method must be p0, p1, or p2, got {method!r}")
    except central.InfeasibleTargetError as e:
        doc.update({"feasible": False, "error": str(e)})
        _write_atomic(os.path.join(out_dir, "solution.json"), json.dumps(doc, indent=2) + "\n")
        print(f"infeasible: {e}", file=sys.stderr)
        return 0
    if method != "p0":
        card = cardinality(X, a, tau=0.01)
    doc.update({
        "feasible": True,
        "cardinality": int(card),
        "allocation": [[float(v) for v in row] for row in X],
        "residuals": {
            "max_column_error": float(np.abs(X.sum(axis=0) - a).max()),
            "min_ratio": min_exchange_ratio(X, a),
        },
        "objective_trace": trace,
    })
    _write_atomic(os.path.join(out_dir, "solution.json"), json.dumps(doc, indent=2) + "\n")
    return 0


# ----------------------------------------------------------------------- main


def _parse_c_grid(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad --c-grid entry: {e}") from e


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparse-exchange",
        description="Simulate sparse resource-exchange network formation and its centralized baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and export metrics/allocation/graph")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ensemble", help="repeat a scenario over consecutive random-init seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--runs", type=int, required=True, help="number of runs R")
    p.add_argument("--seed", type=int, default=0, help="first init seed (default 0)")
    p.add_argument("--jobs", type=int, default=1, help="max concurrent runs (default 1)")

    p = sub.add_parser("sweep", help="run a scenario across a grid of penalty weights")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--c-grid", type=_parse_c_grid, required=True,
                   help="comma-separated penalty weights, e.g. 0.01,0.05,0.2")

    p = sub.add_parser("solve", help="centralized sparsest-allocation baselines")
    p.add_argument("--endowments", required=True, help="JSON endowment file")
    p.add_argument("--theta", type=float, required=True, help="minimum exchange ratio target")
    p.add_argument("--method", choices=("p0", "p1", "p2"), required=True)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.out)
        if args.command == "ensemble":
            return cmd_ensemble(args.scenario, args.out, args.runs, args.seed, args.jobs)
        if args.command == "sweep":
            return cmd_sweep(args.scenario, args.out, args.c_grid)
        return cmd_solve(args.endowments, args.out, args.theta, args.method)
    except (ValueError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
