"""Centralized sparsest-allocation baselines.

Given endowments a and a reciprocity floor theta, find allocations over
    {column sums = a,  r_i >= theta * a_i,  x >= 0,  zero diagonal}
with as few links as possible:

* ``p0_brute_force``: exact minimum by enumerating off-diagonal supports in
  increasing cardinality; an oracle that only scales to tiny N.
* ``p1_reweighted_lp``: local search through a series of linear programs
  with weights 1/(eps + x), the standard concave-log relaxation.
* ``p2_irls``: iteratively reweighted least squares; each outer iteration
  bounds log(eps + x) by a quadratic anchored at the current iterate and
  the resulting QP is solved through its dual multipliers.

Both relaxations return feasible allocations but only the enumerator
certifies minimality.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .simplex import OPTIMAL, StandardFormLP, lp_feasible, lp_solve
from .validation import check_endowments, check_theta

P1_STEP_TOL = 1e-9
P2_STEP_TOL = 1e-9
RATIO_SLACK = 1e-9


class InfeasibleTargetError(ValueError):
    """No allocation meets the requested minimum exchange ratio."""


# ------------------------------------------------------------- LP scaffolding


def _cells(n):
    """Off-diagonal cells in row-major order; also the support enumeration order."""
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _allocation_lp(a, theta, cells, cost=None):
    """LP over the given cells: columns spend a, rows receive >= theta * a."""
    n = a.size
    m = len(cells)
    A = np.zeros((2 * n, m))
    for v, (i, j) in enumerate(cells):
        A[j, v] = 1.0  # giver j's budget row
        A[n + i, v] = 1.0  # receiver i's ratio row
    b = np.concatenate([a, theta * a])
    sense = ("eq",) * n + ("ge",) * n
    if cost is None:
        cost = np.zeros(m)
    return StandardFormLP(A, b, cost, sense)


def _matrix_from(cells, values, n):
    X = np.zeros((n, n))
    for (i, j), v in zip(cells, values):
        X[i, j] = v
    return X


def check_target_feasible(a, theta) -> None:
    """Raise InfeasibleTargetError unless some full-support allocation works."""
    a = check_endowments(a)
    theta = check_theta(theta)
    if not lp_feasible(_allocation_lp(a, theta, _cells(a.size))):
        raise InfeasibleTargetError(
            f"no allocation reaches min exchange ratio {theta} for these endowments"
        )


# ------------------------------------------------------------- exact baseline


def p0_brute_force(a, theta, max_n: int = 4):
    """Exact sparsest allocation by support enumeration.

    Scans supports in increasing cardinality, lexicographic over row-major
    cell order within a cardinality level, and returns the first feasible
    one: (minimum link count, witness allocation). Cost grows as 2^(N(N-1)),
    hence the max_n guard.
    """
    a = check_endowments(a)
    theta = check_theta(theta)
    n = a.size
    if n > max_n:
        raise ValueError(f"support enumeration needs N <= {max_n}, got N = {n}")
    if n >= 5:
        warnings.warn(
            f"enumerating up to 2^{n * (n - 1)} supports; this can take a long time",
            RuntimeWarning,
            stacklevel=2,
        )
    check_target_feasible(a, theta)

    cells = _cells(n)
    # a support can only work if every giver column appears and every
    # receiver row can collect at least theta * a_i from its givers
    need = theta * a
    for k in range(n, len(cells) + 1):
        for sup in itertools.combinations(range(len(cells)), k):
            chosen = [cells[q] for q in sup]
            cols = {j for _, j in chosen}
            if len(cols) < n:
                continue
            inflow = np.zeros(n)
            for i, j in chosen:
                inflow[i] += a[j]
            if np.any(inflow < need):
                continue
            res = lp_solve(_allocation_lp(a, theta, chosen))
            if res.status == OPTIMAL:
                return k, _matrix_from(chosen, res.x, n)
    raise InfeasibleTargetError("exhausted all supports")  # full support was checked


# -------------------------------------------------------------- reweighted LP


def _equal_split(a):
    n = a.size
    X = np.tile(a / (n - 1), (n, 1))
    np.fill_diagonal(X, 0.0)
    return X


def _log_objective(X, eps):
    n = X.shape[0]
    off = ~np.eye(n, dtype=bool)
    return float(np.log(eps + X[off]).sum())


def p1_reweighted_lp(a, theta, eps: float = 0.01, max_outer: int = 100, seed=None):
    """Concave-log local search: linearize at x(t), solve the LP, repeat.

    Weights are 1/(eps + x_ij(t)), seeded from an equal split. With a seed,
    uniform noise of magnitude 1e-6 * mean(a) is added to the weights each
    round to break vertex ties. Returns the allocation and the trace of
    sum log(eps + x) over the LP iterates (non-increasing).
    """
    a = check_endowments(a)
    theta = check_theta(theta)
    if eps <= 0:
        raise ValueError("eps must be positive")
    check_target_feasible(a, theta)
    rng = np.random.Generator(np.random.PCG64(seed)) if seed is not None else None

    n = a.size
    cells = _cells(n)
    idx = tuple(np.array(c) for c in zip(*cells))
    x = _equal_split(a)[idx]
    trace = []
    for _ in range(max_outer):
        w = 1.0 / (eps + x)
        if rng is not None:
            w = w + rng.uniform(0.0, 1e-6 * a.mean(), size=w.size)
        res = lp_solve(_allocation_lp(a, theta, cells, cost=w))
        if res.status != OPTIMAL:
            raise RuntimeError(f"reweighted LP round failed with status {res.status}")
        delta = float(np.abs(res.x - x).max())
        x = res.x
        trace.append(_log_objective(_matrix_from(cells, x, n), eps))
        if delta <= P1_STEP_TOL:
            break
    return _matrix_from(cells, x, n), trace


# ----------------------------------------------------------------------- IRLS


@dataclass(frozen=True)
class P2Params:
    """Quadratic-bound knobs: knee delta (None = 1e-4 * mean(a)/(N-1)), eps,
    outer iteration cap, and dual sweeps per inner solve."""

    delta: float | None = None
    eps: float = 0.01
    max_outer: int = 100
    inner_iters: int = 50

    def __post_init__(self):
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_outer < 1 or self.inner_iters < 1:
            raise ValueError("iteration counts must be at least 1")


def _pwl_root(offsets, coefs, target):
    """Solve sum_k max(0, s + offsets[k]) * coefs[k] = target for s (target > 0).

    The left side is piecewise linear and nondecreasing in s, strictly once
    any term is active, so the root is unique. Activate terms in decreasing
    offset order and solve the matching linear segment.
    """
    order = np.argsort(-offsets)
    o = offsets[order]
    c = coefs[order]
    csum = 0.0
    osum = 0.0
    for k in range(o.size):
        csum += c[k]
        osum += o[k] * c[k]
        s = (target - osum) / csum
        if k + 1 == o.size or s + o[k + 1] <= 0.0:
            return s
    raise AssertionError("unreachable: last segment always matches")


def _dual_qp_solve(a, theta, coef, nu, pi, iters):
    """Approximately minimize sum x^2/(2*coef) over the allocation polytope.

    Stationarity gives x_ij = max(0, nu_j + pi_i) * coef_ij with one free
    multiplier per column budget (nu) and one nonnegative multiplier per
    row floor (pi). The multipliers are driven by a projected fixed-point
    map: exact Gauss-Seidel passes seed the active sets (which cells are
    unclamped, which floors bind), then Newton rounds solve the resulting
    piecewise-linear stationarity system outright, projecting pi back to
    nonnegative. Gauss-Seidel alone contracts at roughly 1 - 1/spread of
    the weights, hopeless once the reweighting concentrates; the Newton
    rounds are insensitive to that spread. The exit test is the full KKT
    error -- column balance, floor violation, and complementary slackness
    (a positive pi on a row with floor slack, measured in resource units
    via the row's weight mass) -- since a Newton round whose active set
    shifted can be primal-feasible yet overshoot a floor it still prices.
    nu and pi are updated in place so the caller can warm-start the next
    solve.
    """
    n = a.size
    others = [np.flatnonzero(np.arange(n) != i) for i in range(n)]
    ftol = 1e-12 * (1.0 + float(a.max()))
    offdiag = ~np.eye(n, dtype=bool)
    rowmass = (coef * offdiag).sum(axis=1)

    def primal():
        X = np.maximum(0.0, nu[None, :] + pi[:, None]) * coef
        np.fill_diagonal(X, 0.0)
        return X

    def kkt_err(X):
        col = float(np.abs(X.sum(axis=0) - a).max())
        slack = X.sum(axis=1) - theta * a
        row = float(np.maximum(0.0, -slack).max())
        cs = float(np.minimum(pi * rowmass, np.maximum(slack, 0.0)).max())
        return max(col, row, cs)

    def gs_sweep():
        for i in range(n):
            js = others[i]
            pi[i] = max(0.0, _pwl_root(nu[js], coef[i, js], theta * a[i]))
        for j in range(n):
            ks = others[j]  # row k gives to column j for k != j
            nu[j] = _pwl_root(pi[ks], coef[ks, j], a[j])

    best_nu = None
    best_pi = None
    best_err = np.inf
    stale = 0
    for k in range(iters):
        if k < 2 or stale >= 2:
            gs_sweep()
            stale = 0
        else:
            X = primal()
            act = (nu[None, :] + pi[:, None] > 0.0) & offdiag
            # semismooth selection for the pair min(pi_i, slack_i) = 0: price
            # the floor as an equality only where the multiplier outweighs the
            # slack (covers violated rows, where slack < 0 <= pi); pricing
            # every positive-pi row would demand all floors tight at once,
            # which no allocation satisfies when theta < 1
            floored = np.flatnonzero(pi > X.sum(axis=1) - theta * a)
            m = coef * act
            size = n + floored.size
            H = np.zeros((size, size))
            H[:n, :n] = np.diag(m.sum(axis=0))
            H[:n, n:] = m[floored, :].T
            H[n:, :n] = m[floored, :]
            H[n:, n:] = np.diag(m[floored, :].sum(axis=1))
            rhs = np.concatenate([a, theta * a[floored]])
            sol = np.linalg.lstsq(H, rhs, rcond=None)[0]
            nu[:] = sol[:n]
            pi[:] = 0.0
            pi[floored] = np.maximum(0.0, sol[n:])
        err = kkt_err(primal())
        if err < 0.5 * best_err:
            stale = 0
        else:
            stale += 1
        if err < best_err:
            best_err = err
            best_nu = nu.copy()
            best_pi = pi.copy()
        if err <= ftol:
            break
    nu[:] = best_nu
    pi[:] = best_pi
    return primal()


def _max_margin_allocation(a, theta):
    """Feasible allocation maximizing the uniform ratio slack above theta."""
    n = a.size
    cells = _cells(n)
    m = len(cells)
    A = np.zeros((2 * n, m + 1))
    for v, (i, j) in enumerate(cells):
        A[j, v] = 1.0
        A[n + i, v] = 1.0
    A[n:, m] = -a  # r_i - s * a_i >= theta * a_i
    b = np.concatenate([a, theta * a])
    cost = np.zeros(m + 1)
    cost[m] = -1.0
    res = lp_solve(StandardFormLP(A, b, cost, ("eq",) * n + ("ge",) * n))
    if res.status != OPTIMAL:
        raise RuntimeError(f"margin LP failed with status {res.status}")
    return _matrix_from(cells, res.x[:m], n)


def _tie_break(n):
    """Fixed asymmetric pattern in [-1, 1] keyed by cell indices.

    Uniform allocations are exact fixed points of the reweighting on
    symmetric instances (the quadratic program returns the least-norm
    feasible point, which is again uniform), so the first anchor gets a
    tiny deterministic nudge to let the iteration descend off the saddle.
    """
    i, j = np.indices((n, n))
    return ((3 * i + 5 * j) % 7) / 3.0 - 1.0


def p2_irls(a, theta, params: P2Params | None = None):
    """IRLS baseline: quadratic upper bounds on log(eps + x), dual inner solves.

    Every outer round re-anchors per-entry weights 1/(2 * m (eps + m)) with
    m = max(anchor, delta) (the knee keeps weights finite at zero entries),
    then approximately solves the weighted least-squares program over the
    allocation polytope via its column/row multipliers and rescales columns
    to exact feasibility. Returns a feasible allocation and the trace of
    sum log(eps + x) over the outer iterates.

    The weight spread grows without bound as entries collapse onto the knee,
    and past some point the dual sweeps can no longer track it: the inner
    solve starts missing the ratio floor. The loop stops there and returns
    the best feasible iterate seen (with a warning); blending toward a
    max-margin allocation is a last resort for the unlikely case that no
    outer iterate was feasible at all.
    """
    a = check_endowments(a)
    theta = check_theta(theta)
    if params is None:
        params = P2Params()
    check_target_feasible(a, theta)

    n = a.size
    delta = params.delta if params.delta is not None else 1e-4 * a.mean() / (n - 1)
    anchor = _equal_split(a) * (1.0 + 1e-3 * _tie_break(n))
    np.fill_diagonal(anchor, 0.0)
    nu = np.zeros(n)
    pi = np.zeros(n)
    trace = []
    best = None  # lowest-objective iterate meeting the ratio floor
    best_obj = np.inf
    fallback = None  # lowest-objective iterate regardless of the floor
    fallback_obj = np.inf
    last = None
    converged = False
    for _ in range(params.max_outer):
        m = np.maximum(anchor, delta)
        coef = m * (params.eps + m)  # x = max(0, nu + pi) * coef at stationarity
        np.fill_diagonal(coef, 0.0)
        X = _dual_qp_solve(a, theta, coef, nu, pi, params.inner_iters)
        X *= a / X.sum(axis=0)  # exact column feasibility
        obj = _log_objective(X, params.eps)
        trace.append(obj)
        worst = float((X.sum(axis=1) / a).min())
        if obj < fallback_obj:
            fallback_obj = obj
            fallback = X
        if worst >= theta - RATIO_SLACK and obj < best_obj:
            best_obj = obj
            best = X
        step = float(np.abs(X - anchor).max())
        anchor = X
        last = X
        if worst < theta - 1e-6:
            # inner solve lost the floor: re-anchoring on this iterate would
            # only spread the weights further, so freeze here
            break
        if step <= P2_STEP_TOL:
            converged = True
            break

    if converged and float((last.sum(axis=1) / a).min()) >= theta - RATIO_SLACK:
        return last, trace
    if best is not None:
        warnings.warn(
            "IRLS did not converge; returning best feasible iterate",
            RuntimeWarning,
            stacklevel=2,
        )
        return best, trace

    # No outer iterate met the floor: blend just enough mass from a
    # max-margin allocation to restore it.
    X = fallback.copy()
    r = X.sum(axis=1)
    floor = (theta - RATIO_SLACK) * a
    ref = _max_margin_allocation(a, theta)
    r_ref = ref.sum(axis=1)
    short = r < floor
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.max(((theta - 0.5 * RATIO_SLACK) * a - r)[short] / (r_ref - r)[short])
    if not np.isfinite(t) or t > 1:
        t = 1.0
    warnings.warn(f"IRLS output repaired by blending t={t:.3g}", RuntimeWarning, stacklevel=2)
    return (1.0 - t) * X + t * ref, trace
