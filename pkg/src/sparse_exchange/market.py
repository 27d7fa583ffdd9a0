"""Exchange-market state, derived quantities, and graph metrics.

Conventions used throughout the package:

* ``X[i, j]`` is the amount peer j gives to peer i, so column j of an
  allocation matrix spends peer j's endowment and row i collects what
  peer i receives.
* ``r_i = sum_j X[i, j]`` is the receive vector, ``rho_i = r_i / a_i``
  the exchange ratio. For any column-feasible X the a-weighted mean of
  rho is exactly 1, hence ``min_i rho_i <= 1``.
* An entry counts as a graph link when it exceeds ``tau * mean(a)/(N-1)``,
  the per-edge allocation of an equal split scaled by the dimensionless
  threshold tau.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_allocation, check_endowments


@dataclass(frozen=True)
class SparsityParams:
    """Penalty weight c, smoothing eps, and link-count threshold tau."""

    c: float = 0.0
    eps: float = 0.01
    tau: float = 0.01

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class MarketState:
    """An allocation matrix, the endowments it spends, and the iteration index."""

    X: np.ndarray
    a: np.ndarray
    t: int = 0

    def __post_init__(self):
        a = check_endowments(self.a)
        X = check_allocation(self.X, a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "X", X)
        if self.t < 0:
            raise ValueError("iteration index must be nonnegative")

    @property
    def n(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class MetricsRecord:
    """Per-iteration summary: link counts, worst ratio, divergences, step size."""

    t: int
    cardinality: int
    reciprocity: int
    min_ratio: float
    d_ra: float
    d_ar: float
    step_delta: float


# ---------------------------------------------------------------- quantities


def receive_vector(X) -> np.ndarray:
    """Row sums excluding the diagonal: what each peer receives."""
    X = np.asarray(X, dtype=float)
    return X.sum(axis=1) - np.diag(X)


def exchange_ratios(X, a) -> np.ndarray:
    """Received over contributed, r_i / a_i, for strictly positive endowments."""
    a = check_endowments(a)
    return receive_vector(X) / a


def min_exchange_ratio(X, a) -> float:
    """Worst exchange ratio across peers; at most 1 for column-feasible X."""
    return float(exchange_ratios(X, a).min())


def kl_divergence(u, v) -> float:
    """D(u, v) = sum u_i log(u_i/v_i) - sum(u_i - v_i), with 0 log 0 := 0.

    Nonnegative for any nonnegative vectors (not just distributions), zero
    iff u == v. Raises ValueError where u_i > 0 meets v_i = 0.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("vectors must be nonnegative")
    pos = u > 0
    if np.any(v[pos] == 0):
        raise ValueError("D(u, v) undefined: u_i > 0 where v_i = 0")
    terms = u[pos] * np.log(u[pos] / v[pos])
    return float(terms.sum() - (u.sum() - v.sum()))


# ------------------------------------------------------------- graph metrics


def link_threshold(a, tau: float) -> float:
    """Absolute link cutoff: tau times the equal-split per-edge allocation."""
    a = check_endowments(a)
    if tau <= 0:
        raise ValueError("tau must be positive")
    return tau * a.mean() / (a.size - 1)


def link_mask(X, a, tau: float) -> np.ndarray:
    """Boolean matrix of entries counted as links (strictly above the cutoff)."""
    X = np.asarray(X, dtype=float)
    return X > link_threshold(a, tau)


def cardinality(X, a, tau: float) -> int:
    """Number of directed links in the allocation graph."""
    return int(link_mask(X, a, tau).sum())


def reciprocity(X, a, tau: float) -> int:
    """Number of directed links whose reverse link is also present."""
    mask = link_mask(X, a, tau)
    return int((mask & mask.T).sum())


def metrics_record(state: MarketState, tau: float, step_delta: float) -> MetricsRecord:
    """Bundle all per-iteration metrics for one state."""
    r = receive_vector(state.X)
    return MetricsRecord(
        t=state.t,
        cardinality=cardinality(state.X, state.a, tau),
        reciprocity=reciprocity(state.X, state.a, tau),
        min_ratio=min_exchange_ratio(state.X, state.a),
        d_ra=kl_divergence(r, state.a),
        d_ar=kl_divergence(state.a, r),
        step_delta=step_delta,
    )
