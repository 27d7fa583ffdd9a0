"""Dense two-phase primal simplex with Bland's rule.

Small, deterministic LP kernel for the feasibility checks and reweighted
linear programs of the centralized solvers. Instances stay tiny (n = N(N-1)
variables with N mostly <= 25), so a dense tableau beats any factorization
machinery, and Bland's pivoting rule is always on: slower, but cycle-proof
and bit-for-bit reproducible. Minimization throughout; variables are
nonnegative; rows carry their own sense (eq / ge / le).
"""

from dataclasses import dataclass

import numpy as np

# reduced costs this far below zero trigger a pivot
COST_TOL = 1e-9
# smallest pivot element accepted in the ratio test
PIVOT_TOL = 1e-10
ITER_CAP_FACTOR = 10_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERIC_FAILURE = "numeric_failure"

_SENSES = ("eq", "ge", "le")


@dataclass(frozen=True)
class StandardFormLP:
    """min cost . x  s.t.  A x (sense) b,  x >= 0, with sense per row."""

    A: np.ndarray
    b: np.ndarray
    cost: np.ndarray
    sense: tuple

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"A must be a nonempty matrix, got shape {A.shape}")
        m, n = A.shape
        if b.shape != (m,) or cost.shape != (n,):
            raise ValueError("b / cost shapes do not match A")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(cost))):
            raise ValueError("LP data must be finite")
        sense = tuple(self.sense)
        if len(sense) != m or any(s not in _SENSES for s in sense):
            raise ValueError("sense must give 'eq', 'ge', or 'le' per row")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "sense", sense)


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float | None


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _bland_loop(T, basis, ncols, max_iter):
    """Pivot to optimality. Returns 'optimal', 'unbounded', or 'numeric_failure'."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        reduced = T[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if reduced[j] < -COST_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        # ratio test; ties go to the smallest basic-variable index (Bland)
        leave = -1
        best = 0.0
        for i in range(m):
            aij = T[i, entering]
            if aij > PIVOT_TOL:
                ratio = T[i, -1] / aij
                if leave < 0:
                    best = ratio
                    leave = i
                    continue
                tie = 1e-12 * (1.0 + abs(best))
                if ratio < best - tie:
                    best = ratio
                    leave = i
                elif ratio <= best + tie and basis[i] < basis[leave]:
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(T, basis, leave, entering)
    return NUMERIC_FAILURE


def _build_tableau(lp):
    """Tableau with rhs >= 0, slack/surplus columns, and artificial columns."""
    A = lp.A.copy()
    b = lp.b.copy()
    sense = list(lp.sense)
    m, n = A.shape
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            if sense[i] == "ge":
                sense[i] = "le"
            elif sense[i] == "le":
                sense[i] = "ge"

    n_slack = sum(s != "eq" for s in sense)
    n_art = sum(s != "le" for s in sense)
    ncols = n + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [-1] * m
    s_at = n
    a_at = n + n_slack
    art_cols = []
    for i, s in enumerate(sense):
        if s == "le":
            T[i, s_at] = 1.0
            basis[i] = s_at
            s_at += 1
        elif s == "ge":
            T[i, s_at] = -1.0
            s_at += 1
            T[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1
        else:
            T[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1
    return T, basis, ncols, art_cols


def _phase1(T, basis, ncols, art_cols, max_iter):
    """Minimize the artificial sum; returns a status string."""
    m = T.shape[0] - 1
    T[-1, :] = 0.0
    for col in art_cols:
        T[-1, col] = 1.0
    for i in range(m):
        if basis[i] in art_cols:
            T[-1] -= T[i]
    status = _bland_loop(T, basis, ncols, max_iter)
    if status == UNBOUNDED:
        return NUMERIC_FAILURE  # phase-1 objective is bounded below by 0
    if status != OPTIMAL:
        return status
    feas_tol = 1e-9 * (1.0 + np.abs(T[:m, -1]).sum())
    if -T[-1, -1] > feas_tol:
        return INFEASIBLE
    return OPTIMAL


def _evict_artificials(T, basis, art_first):
    """Pivot leftover artificials out of the basis; drop redundant rows."""
    keep = []
    m = T.shape[0] - 1
    for i in range(m):
        if basis[i] < art_first:
            keep.append(i)
            continue
        pivot_col = -1
        for j in range(art_first):
            if abs(T[i, j]) > PIVOT_TOL:
                pivot_col = j
                break
        if pivot_col >= 0:
            _pivot(T, basis, i, pivot_col)
            keep.append(i)
        # else: the row reduced to 0 = 0 and is redundant
    rows = keep + [m]
    return T[rows], [basis[i] for i in keep]


def lp_solve(lp: StandardFormLP) -> LPResult:
    """Two-phase simplex. Returns status, the solution x, and cost . x."""
    m, n = lp.A.shape
    max_iter = ITER_CAP_FACTOR * max(m, n)
    T, basis, ncols, art_cols = _build_tableau(lp)
    art_first = ncols - len(art_cols)

    status = _phase1(T, basis, ncols, art_cols, max_iter)
    if status != OPTIMAL:
        return LPResult(status, None, None)
    T, basis = _evict_artificials(T, basis, art_first)

    # phase 2 on the original cost, artificial columns frozen out
    T[-1, :] = 0.0
    T[-1, :n] = lp.cost
    for i, bi in enumerate(basis):
        if T[-1, bi] != 0.0:
            T[-1] -= T[-1, bi] * T[i]
    status = _bland_loop(T, basis, art_first, max_iter)
    if status != OPTIMAL:
        return LPResult(status, None, None)

    x = np.zeros(n)
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = T[i, -1]
    x[np.abs(x) < 1e-14] = 0.0
    return LPResult(OPTIMAL, x, float(np.dot(lp.cost, x)))


def lp_feasible(lp: StandardFormLP) -> bool:
    """Phase-1 emptiness test for the polytope; the cost vector is ignored."""
    m, n = lp.A.shape
    max_iter = ITER_CAP_FACTOR * max(m, n)
    T, basis, ncols, art_cols = _build_tableau(lp)
    status = _phase1(T, basis, ncols, art_cols, max_iter)
    if status == NUMERIC_FAILURE:
        raise RuntimeError("simplex iteration cap exceeded in feasibility check")
    return status == OPTIMAL
