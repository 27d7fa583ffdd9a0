"""Estimator-style front doors for the dynamics and the centralized solvers.

Thin wrappers following the scikit-learn convention: constructor keyword
parameters, a ``fit(endowments)`` method, learned attributes with trailing
underscores, and ``get_params``/``set_params`` inherited from BaseEstimator
so instances clone and grid-search like any other estimator.
"""

import numpy as np
from sklearn.base import BaseEstimator

from . import central
from .dynamics import ALGORITHMS, RunConfig, run
from .market import MarketState, SparsityParams, cardinality, min_exchange_ratio
from .scenario import init_allocation
from .validation import check_endowments


class SparseExchange(BaseEstimator):
    """Form an exchange network by iterating one of the decentralized rules.

    Parameters mirror the run configuration: the update rule (``pr``,
    ``sparse``, or ``egsparse``), penalty weight c, smoothing eps, link
    threshold tau, the initial split (``equal`` or ``random`` with
    random_state), the iteration cap, and the convergence tolerance
    (max-abs step below tol * mean endowment stops the run).

    Attributes after fit: ``allocation_``, ``endowments_``, ``n_iter_``,
    ``converged_``, ``history_`` (metric records), ``metrics_`` (final
    record).
    """

    def __init__(self, algorithm="sparse", c=0.1, eps=0.01, tau=0.01,
                 init="equal", random_state=None, max_iter=5000, tol=1e-8,
                 record_every=100):
        self.algorithm = algorithm
        self.c = c
        self.eps = eps
        self.tau = tau
        self.init = init
        self.random_state = random_state
        self.max_iter = max_iter
        self.tol = tol
        self.record_every = record_every

    def fit(self, endowments, y=None):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        a = check_endowments(endowments)
        X0 = init_allocation(a, self.init, self.random_state)
        cfg = RunConfig(
            max_iters=self.max_iter,
            conv_tol=self.tol,
            algorithm=self.algorithm,
            params=SparsityParams(c=self.c, eps=self.eps, tau=self.tau),
            record_every=self.record_every,
        )
        state, records = run(MarketState(X0, a), cfg)
        self.endowments_ = a
        self.allocation_ = state.X
        self.n_iter_ = state.t
        self.history_ = records
        self.metrics_ = records[-1]
        self.converged_ = records[-1].step_delta <= self.tol * float(a.mean())
        return self

    def fit_predict(self, endowments, y=None):
        """Fit and return the final allocation matrix."""
        return self.fit(endowments).allocation_


class SparsestAllocation(BaseEstimator):
    """Centralized sparsest-allocation baseline under a reciprocity floor.

    ``method``: ``p0`` (exact enumeration, tiny N only), ``p1`` (reweighted
    LP), or ``p2`` (IRLS). ``theta`` is the minimum exchange ratio in
    (0, 1]. ``random_state`` seeds p1's optional tie-breaking perturbation.

    Attributes after fit: ``allocation_``, ``cardinality_``, ``min_ratio_``,
    ``trace_`` (objective values, None for p0), ``optimal_`` (True only for
    p0's certified minimum).
    """

    def __init__(self, method="p1", theta=1.0, eps=0.01, delta=None,
                 max_outer=100, inner_iters=50, max_n=4, tau=0.01,
                 random_state=None):
        self.method = method
        self.theta = theta
        self.eps = eps
        self.delta = delta
        self.max_outer = max_outer
        self.inner_iters = inner_iters
        self.max_n = max_n
        self.tau = tau
        self.random_state = random_state

    def fit(self, endowments, y=None):
        a = check_endowments(endowments)
        if self.method == "p0":
            card, X = central.p0_brute_force(a, self.theta, max_n=self.max_n)
            trace = None
            optimal = True
        elif self.method == "p1":
            X, trace = central.p1_reweighted_lp(
                a, self.theta, eps=self.eps, max_outer=self.max_outer,
                seed=self.random_state,
            )
            optimal = False
        elif self.method == "p2":
            params = central.P2Params(delta=self.delta, eps=self.eps,
                                      max_outer=self.max_outer,
                                      inner_iters=self.inner_iters)
            X, trace = central.p2_irls(a, self.theta, params)
            optimal = False
        else:
            raise ValueError(f"method must be 'p0', 'p1', or 'p2', got {self.method!r}")
        self.endowments_ = a
        self.allocation_ = X
        self.cardinality_ = cardinality(X, a, self.tau)
        self.min_ratio_ = min_exchange_ratio(X, a)
        self.trace_ = trace
        self.optimal_ = optimal
        return self
