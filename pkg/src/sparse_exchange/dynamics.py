"""Decentralized exchange dynamics.

Three synchronous update rules over a common market state:

* ``pr_step``: classic proportional response. Each peer splits its
  endowment over partners in proportion to partner receipts weighted by
  the partners' exchange ratios.
* ``sparse_step``: proportional response with nonlinear pricing. Peer i
  charges peer j the per-unit price ``rho_i * exp(c/(eps + x_ij))``, so
  thin relationships get expensive and starve; equivalently a penalized
  multiplicative update followed by column normalization. Both routes are
  implemented and agree to floating-point accuracy.
* ``egsparse_step``: the budget-multiplier form. Each peer i prices
  partners through a weight ``w(x) = c/(eps + x)`` and a scalar lambda_i
  chosen by bisection so its bids exhaust the endowment exactly.

With c = 0 all three rules coincide. Updates are simultaneous: every peer
computes from X(t) and commits X(t+1) at once. Entries are never pruned to
zero during iteration; sparsity shows up in the values and is measured by
the tau threshold at reporting time.
"""

from dataclasses import dataclass

import numpy as np

from .market import (
    MarketState,
    MetricsRecord,
    SparsityParams,
    kl_divergence,
    metrics_record,
    receive_vector,
)

PR = "pr"
SPARSE = "sparse"
EGSPARSE = "egsparse"
ALGORITHMS = (PR, SPARSE, EGSPARSE)

# beyond this exponent exp() would under/overflow; switch to the log domain
_EXP_ARG_LIMIT = 700.0
_LAMBDA_RTOL = 1e-10
_BRACKET_DOUBLINGS = 200


class DegenerateStateError(RuntimeError):
    """The state reached a configuration the update rules cannot price."""


@dataclass(frozen=True)
class RunConfig:
    """Run-loop knobs: iteration budget, stop rule, rule choice, recording."""

    max_iters: int
    conv_tol: float = 1e-8
    algorithm: str = SPARSE
    params: SparsityParams = SparsityParams()
    record_every: int = 100

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.conv_tol <= 0:
            raise ValueError("conv_tol must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


def _ratios_checked(X, a):
    r = receive_vector(X)
    if np.any(r <= 0):
        dead = np.flatnonzero(r <= 0)
        raise DegenerateStateError(f"peers {dead.tolist()} receive nothing")
    return r / a


# ------------------------------------------------------- proportional response


def pr_step(state: MarketState) -> np.ndarray:
    """One linear-pricing update: reweight by partner ratios, renormalize columns."""
    X, a = state.X, state.a
    rho = _ratios_checked(X, a)
    Y = X / rho[:, None]
    cols = Y.sum(axis=0)
    if np.any(cols <= 0):
        dead = np.flatnonzero(cols <= 0)
        raise DegenerateStateError(f"columns {dead.tolist()} have zero weight")
    return Y * (a / cols)[None, :]


# ------------------------------------------------------------ nonlinear pricing


def sparse_prices(state: MarketState, params: SparsityParams) -> np.ndarray:
    """Price matrix mu with mu[j, i] = rho_i * exp(c/(eps + X[i, j])).

    mu[j, i] is the per-unit price peer i charges peer j: it falls toward
    rho_i as j's payment x_ij grows and peaks at rho_i * exp(c/eps) for a
    zero payment. Diagonal entries are zero placeholders.
    """
    X, a = state.X, state.a
    rho = _ratios_checked(X, a)
    mu = (rho[:, None] * np.exp(params.c / (params.eps + X))).T
    np.fill_diagonal(mu, 0.0)
    return mu


def _normalize_columns_logdomain(logY, a, out, cols):
    """Column-normalize exp(logY) for the given columns without underflow."""
    n = a.size
    off = ~np.eye(n, dtype=bool)
    for j in cols:
        rows = off[:, j]
        lw = logY[rows, j] - logY[rows, j].max()
        w = np.exp(lw)
        out[rows, j] = a[j] * w / w.sum()


def sparse_step_multiplicative(state: MarketState, params: SparsityParams) -> np.ndarray:
    """Penalized multiplicative route: x * (a_i/r_i) * exp(-c/(eps+x)), renormalized."""
    X, a = state.X, state.a
    rho = _ratios_checked(X, a)
    z = params.c / (params.eps + X)
    if np.all(z <= _EXP_ARG_LIMIT):
        Y = X / rho[:, None] * np.exp(-z)
        np.fill_diagonal(Y, 0.0)
        lost = (Y == 0) & (X > 0)
        cols = Y.sum(axis=0)
        if not lost.any() and np.all(cols > 0):
            return Y * (a / cols)[None, :]
    # some factor underflowed; rebuild the affected columns in the log domain
    with np.errstate(divide="ignore"):
        logY = np.log(X) - np.log(rho)[:, None] - z
    out = np.zeros_like(X)
    _normalize_columns_logdomain(logY, a, out, range(a.size))
    return out


def sparse_step_bids(state: MarketState, params: SparsityParams) -> np.ndarray:
    """Price/bid route: b_ij = x_ji / mu_ij, then peer i splits a_i over the bids.

    b[i, j] is what peer j owes peer i: i's payment x_ji divided by the
    price mu_ij that j charges i. Algebraically identical to the
    multiplicative route; kept as an independent code path.
    """
    X, a = state.X, state.a
    z = params.c / (params.eps + X)
    if np.any(z > _EXP_ARG_LIMIT):
        # prices would overflow; the two routes coincide, so delegate
        return sparse_step_multiplicative(state, params)
    mu = sparse_prices(state, params)
    np.fill_diagonal(mu, 1.0)  # placeholder, bids on the diagonal stay zero
    B = X.T / mu
    np.fill_diagonal(B, 0.0)
    total = B.sum(axis=1)
    if np.any(total <= 0):
        dead = np.flatnonzero(total <= 0)
        raise DegenerateStateError(f"peers {dead.tolist()} received zero total bids")
    return (B * (a / total)[:, None]).T


def sparse_step(state: MarketState, params: SparsityParams) -> np.ndarray:
    """One nonlinear-pricing update; bid route by definition."""
    return sparse_step_bids(state, params)


# --------------------------------------------------------- budget multipliers


def egsparse_bids(state: MarketState, params: SparsityParams, lam: float, i: int) -> np.ndarray:
    """Bids of peer i toward every peer j at multiplier lam.

    b_ij = (x_ji / rho_j) / (lam + w(x_ji)) with w(x) = c/(eps + x); entry i
    is zero. Strictly decreasing in lam on the admissible domain.
    """
    X, a = state.X, state.a
    rho = _ratios_checked(X, a)
    paid = X[:, i]  # x_ji: what peer i handed to each j
    den = lam + params.c / (params.eps + paid)
    mask = np.arange(a.size) != i
    if np.any(den[mask] <= 0):
        raise ValueError(f"lambda {lam} leaves nonpositive denominators for peer {i}")
    b = np.zeros(a.size)
    b[mask] = paid[mask] / rho[mask] / den[mask]
    return b


def solve_lambda(state: MarketState, params: SparsityParams, i: int) -> float:
    """Budget multiplier of peer i: the lam with sum_j b_ij(lam) = a_i.

    The budget is continuous and strictly decreasing in lam on
    (-min_j w(x_ji), inf), so the root is unique; bisection resolves it to
    the last floating-point bit. c = 0 short-circuits to the linear
    closed form lam = (1/a_i) sum_j x_ji / rho_j.
    """
    X, a = state.X, state.a
    rho = _ratios_checked(X, a)
    mask = np.arange(a.size) != i
    paid = X[mask, i]
    share = paid / rho[mask]
    if not np.any(paid > 0):
        raise DegenerateStateError(f"peer {i} has nothing allocated")
    if params.c == 0:
        return float(share.sum() / a[i])

    w = params.c / (params.eps + paid)
    target = float(a[i])

    def budget(lam):
        return float((share / (lam + w)).sum())

    lo = -float(w.min()) + 1e-12
    if budget(lo) < target:
        raise DegenerateStateError(f"budget of peer {i} cannot be exhausted (pole too weak)")
    hi = max(1.0, lo + 1.0)
    for _ in range(_BRACKET_DOUBLINGS):
        if budget(hi) <= target:
            break
        hi *= 2.0
    else:
        raise DegenerateStateError(f"bracket expansion failed for peer {i}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # interval exhausted at double precision
            break
        if budget(mid) > target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    if abs(budget(lam) - target) > _LAMBDA_RTOL * target:
        raise RuntimeError(f"budget residual too large for peer {i}")
    return float(lam)


def egsparse_multipliers(state: MarketState, params: SparsityParams):
    """All peers' budget multipliers and their absolute budget residuals."""
    n = state.n
    lam = np.empty(n)
    resid = np.empty(n)
    for i in range(n):
        lam[i] = solve_lambda(state, params, i)
        resid[i] = abs(egsparse_bids(state, params, lam[i], i).sum() - state.a[i])
    return lam, resid


def egsparse_step(state: MarketState, params: SparsityParams) -> np.ndarray:
    """One budget-multiplier update: column i of X(t+1) is peer i's bid vector."""
    n = state.n
    out = np.zeros_like(state.X)
    for i in range(n):
        lam = solve_lambda(state, params, i)
        out[:, i] = egsparse_bids(state, params, lam, i)
    return out


# -------------------------------------------------------------------- run loop


def penalized_objective(X, a, params: SparsityParams) -> float:
    """D(r(X), a) + c * sum log(eps + x) over off-diagonal entries.

    The quantity the nonlinear-pricing update descends on; useful for
    monitoring and tests.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    off = ~np.eye(n, dtype=bool)
    pen = params.c * float(np.log(params.eps + X[off]).sum())
    return kl_divergence(receive_vector(X), a) + pen


def run(state0: MarketState, cfg: RunConfig):
    """Iterate the configured rule from state0 until convergence or the cap.

    Stops when the max-abs allocation change drops to conv_tol * mean(a).
    Returns the final state plus metric records taken every record_every
    steps and at the final step.

    Raises DegenerateStateError annotated with the failing iteration if a
    step cannot be computed.
    """
    if cfg.algorithm == PR:
        def step(s):
            return pr_step(s)
    elif cfg.algorithm == SPARSE:
        def step(s):
            return sparse_step(s, cfg.params)
    else:
        def step(s):
            return egsparse_step(s, cfg.params)

    abar = float(state0.a.mean())
    stop = cfg.conv_tol * abar
    state = state0
    records: list[MetricsRecord] = []
    for k in range(cfg.max_iters):
        try:
            X_next = step(state)
        except DegenerateStateError as e:
            raise DegenerateStateError(f"iteration {state.t + 1}: {e}") from e
        delta = float(np.abs(X_next - state.X).max())
        state = MarketState(X_next, state.a, state.t + 1)
        done = delta <= stop or k == cfg.max_iters - 1
        if done or state.t % cfg.record_every == 0:
            records.append(metrics_record(state, cfg.params.tau, delta))
        if delta <= stop:
            break
    return state, records
