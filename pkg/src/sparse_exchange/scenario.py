"""Scenario construction and the scenario file format.

A scenario fully determines a run: endowments (explicit or lognormal with a
seed), the initial allocation rule (equal or seeded random), the run
configuration, and the sparsity parameters. All randomness is drawn from a
PCG64 generator seeded by scenario-declared integers, never from global or
platform state, so a scenario file reproduces its run bit-for-bit on one
platform.

Scenario files are JSON with an explicit schema version; unknown keys are
rejected so typos cannot silently change an experiment.
"""

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ALGORITHMS, RunConfig
from .market import MarketState, SparsityParams
from .validation import check_endowments

SCHEMA_VERSION = 1

EQUAL = "equal"
RANDOM = "random"

DEFAULT_MU_LOG = 4.5
DEFAULT_SIGMA_SQ = 0.25


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def sample_endowments(n: int, mu_log: float = DEFAULT_MU_LOG,
                      sigma_sq: float = DEFAULT_SIGMA_SQ, seed: int = 0) -> np.ndarray:
    """n endowments with log a_i ~ Normal(mu_log, sigma_sq), reproducibly seeded."""
    if n < 2:
        raise ValueError("need at least two peers")
    if sigma_sq <= 0:
        raise ValueError("sigma_sq must be positive")
    z = _rng(seed).normal(mu_log, math.sqrt(sigma_sq), size=n)
    return np.exp(z)


def init_allocation(a, mode: str = EQUAL, seed=None) -> np.ndarray:
    """Initial allocation: equal split, or per-column normalized uniforms.

    Random mode draws each giver column in index order from one seeded
    generator and rescales it to the giver's endowment, so columns are
    feasible and strictly positive either way.
    """
    a = check_endowments(a)
    n = a.size
    if mode == EQUAL:
        X = np.tile(a / (n - 1), (n, 1))
        np.fill_diagonal(X, 0.0)
        return X
    if mode == RANDOM:
        rng = _rng(seed)
        X = np.zeros((n, n))
        rows = np.arange(n)
        for j in range(n):
            u = rng.uniform(size=n - 1)
            X[rows != j, j] = a[j] * u / u.sum()
        return X
    raise ValueError(f"init mode must be '{EQUAL}' or '{RANDOM}', got {mode!r}")


# ---------------------------------------------------------------- scenario spec


@dataclass(frozen=True)
class EndowmentSpec:
    """Either explicit values or a seeded lognormal draw of size n."""

    kind: str  # "explicit" | "lognormal"
    values: tuple = ()
    mu_log: float = DEFAULT_MU_LOG
    sigma_sq: float = DEFAULT_SIGMA_SQ
    seed: int = 0

    def realize(self, n: int) -> np.ndarray:
        if self.kind == "explicit":
            a = check_endowments(np.asarray(self.values, dtype=float))
            if a.size != n:
                raise ValueError(f"scenario says n={n} but lists {a.size} endowments")
            return a
        return sample_endowments(n, self.mu_log, self.sigma_sq, self.seed)


@dataclass(frozen=True)
class InitSpec:
    mode: str = EQUAL
    seed: int | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to reproduce one run."""

    n: int
    endowments: EndowmentSpec
    init: InitSpec
    run: RunConfig
    params: SparsityParams

    def build_state(self) -> MarketState:
        a = self.endowments.realize(self.n)
        X0 = init_allocation(a, self.init.mode, self.init.seed)
        return MarketState(X0, a, 0)

    def with_init_seed(self, seed: int) -> "ScenarioSpec":
        """Same scenario with a random init seeded by `seed` (ensemble member)."""
        return replace(self, init=InitSpec(RANDOM, seed))

    def with_c(self, c: float) -> "ScenarioSpec":
        """Same scenario with penalty weight c (sweep member)."""
        params = replace(self.params, c=float(c))
        run = replace(self.run, params=params)
        return replace(self, params=params, run=run)


# ------------------------------------------------------------- (de)serialization


def _require_keys(section: dict, allowed: dict, where: str) -> dict:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ValueError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = [k for k, required in allowed.items() if required and k not in section]
    if missing:
        raise ValueError(f"missing key(s) {missing} in {where}")
    return section


def spec_from_dict(doc: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from a parsed scenario document, strictly."""
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a JSON object")
    _require_keys(doc, {"schema": True, "n": True, "endowments": True,
                        "init": True, "run": True, "params": True}, "scenario")
    if doc["schema"] != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc['schema']!r}, expected {SCHEMA_VERSION}")
    n = int(doc["n"])

    end = doc["endowments"]
    if not isinstance(end, dict) or len(end) != 1:
        raise ValueError("endowments must be an object with exactly one of 'explicit' or 'lognormal'")
    if "explicit" in end:
        values = tuple(float(v) for v in end["explicit"])
        if len(values) != n:
            raise ValueError(f"scenario says n={n} but lists {len(values)} endowments")
        endspec = EndowmentSpec(kind="explicit", values=values)
    elif "lognormal" in end:
        ln = _require_keys(end["lognormal"],
                           {"mu_log": False, "sigma_sq": False, "seed": True},
                           "endowments.lognormal")
        endspec = EndowmentSpec(kind="lognormal",
                                mu_log=float(ln.get("mu_log", DEFAULT_MU_LOG)),
                                sigma_sq=float(ln.get("sigma_sq", DEFAULT_SIGMA_SQ)),
                                seed=int(ln["seed"]))
    else:
        raise ValueError(f"unknown endowments kind {sorted(end)} (want 'explicit' or 'lognormal')")

    init = _require_keys(doc["init"], {"mode": True, "seed": False}, "init")
    mode = init["mode"]
    if mode == RANDOM and "seed" not in init:
        raise ValueError("random init requires a seed")
    if mode == EQUAL and "seed" in init:
        raise ValueError("equal init takes no seed")
    if mode not in (EQUAL, RANDOM):
        raise ValueError(f"init mode must be '{EQUAL}' or '{RANDOM}', got {mode!r}")
    initspec = InitSpec(mode=mode, seed=int(init["seed"]) if "seed" in init else None)

    par = _require_keys(doc["params"], {"c": False, "eps": False, "tau": False}, "params")
    params = SparsityParams(c=float(par.get("c", 0.0)), eps=float(par.get("eps", 0.01)),
                            tau=float(par.get("tau", 0.01)))

    rn = _require_keys(doc["run"], {"algorithm": True, "max_iters": True,
                                    "conv_tol": False, "record_every": False}, "run")
    if rn["algorithm"] not in ALGORITHMS:
        raise ValueError(f"run.algorithm must be one of {ALGORITHMS}, got {rn['algorithm']!r}")
    run = RunConfig(max_iters=int(rn["max_iters"]),
                    conv_tol=float(rn.get("conv_tol", 1e-8)),
                    algorithm=rn["algorithm"],
                    params=params,
                    record_every=int(rn.get("record_every", 100)))
    return ScenarioSpec(n=n, endowments=endspec, init=initspec, run=run, params=params)


def spec_to_dict(spec: ScenarioSpec) -> dict:
    if spec.endowments.kind == "explicit":
        end = {"explicit": list(spec.endowments.values)}
    else:
        end = {"lognormal": {"mu_log": spec.endowments.mu_log,
                             "sigma_sq": spec.endowments.sigma_sq,
                             "seed": spec.endowments.seed}}
    init = {"mode": spec.init.mode}
    if spec.init.seed is not None:
        init["seed"] = spec.init.seed
    return {
        "schema": SCHEMA_VERSION,
        "n": spec.n,
        "endowments": end,
        "init": init,
        "run": {"algorithm": spec.run.algorithm, "max_iters": spec.run.max_iters,
                "conv_tol": spec.run.conv_tol, "record_every": spec.run.record_every},
        "params": {"c": spec.params.c, "eps": spec.params.eps, "tau": spec.params.tau},
    }


def load_scenario(path) -> ScenarioSpec:
    """Parse a scenario file; JSON errors are reported with line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: invalid scenario at line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return spec_from_dict(doc)
    except ValueError as e:
        raise ValueError(f"{path}: {e}") from e


def dump_scenario(spec: ScenarioSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_dict(spec), fh, indent=2)
        fh.write("\n")
