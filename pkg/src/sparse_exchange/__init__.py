"""Sparse resource-exchange network formation.

Peers holding divisible resource endowments repeatedly re-split them across
partners. Proportional response with linear pricing converges to a market
equilibrium where everyone's exchange ratio is balanced; adding a nonlinear
price markup ``exp(c/(eps + x))`` on thin links starves weak relationships
and the surviving network is sparse. This package provides the three
decentralized update rules, centralized sparsest-allocation baselines, and
a reproducible experiment harness.
"""

from .central import (
    InfeasibleTargetError,
    P2Params,
    p0_brute_force,
    p1_reweighted_lp,
    p2_irls,
)
from .dynamics import (
    ALGORITHMS,
    EGSPARSE,
    PR,
    SPARSE,
    DegenerateStateError,
    RunConfig,
    egsparse_bids,
    egsparse_multipliers,
    egsparse_step,
    penalized_objective,
    pr_step,
    run,
    solve_lambda,
    sparse_prices,
    sparse_step,
    sparse_step_bids,
    sparse_step_multiplicative,
)
from .estimators import SparseExchange, SparsestAllocation
from .market import (
    MarketState,
    MetricsRecord,
    SparsityParams,
    cardinality,
    exchange_ratios,
    kl_divergence,
    link_mask,
    link_threshold,
    metrics_record,
    min_exchange_ratio,
    receive_vector,
    reciprocity,
)
from .scenario import (
    ScenarioSpec,
    dump_scenario,
    init_allocation,
    load_scenario,
    sample_endowments,
)
from .simplex import LPResult, StandardFormLP, lp_feasible, lp_solve

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "DegenerateStateError",
    "EGSPARSE",
    "InfeasibleTargetError",
    "LPResult",
    "MarketState",
    "MetricsRecord",
    "P2Params",
    "PR",
    "RunConfig",
    "SPARSE",
    "ScenarioSpec",
    "SparseExchange",
    "SparsestAllocation",
    "SparsityParams",
    "StandardFormLP",
    "cardinality",
    "dump_scenario",
    "egsparse_bids",
    "egsparse_multipliers",
    "egsparse_step",
    "exchange_ratios",
    "init_allocation",
    "kl_divergence",
    "link_mask",
    "link_threshold",
    "load_scenario",
    "lp_feasible",
    "lp_solve",
    "metrics_record",
    "min_exchange_ratio",
    "p0_brute_force",
    "p1_reweighted_lp",
    "p2_irls",
    "penalized_objective",
    "pr_step",
    "receive_vector",
    "reciprocity",
    "run",
    "sample_endowments",
    "solve_lambda",
    "sparse_prices",
    "sparse_step",
    "sparse_step_bids",
    "sparse_step_multiplicative",
    "__version__",
]
