"""Input validation helpers shared across the package.

All public entry points funnel raw user inputs through these checks so the
numerical code can assume well-formed arrays: positive endowments, zero
diagonals, column sums matching endowments.
"""

import numpy as np

# column sums may drift from the endowments by floating-point noise only
COLUMN_FEASIBILITY_RTOL = 1e-9


def check_endowments(a) -> np.ndarray:
    """Validate and return an endowment vector as a float64 array.

    Requires a 1-D vector of at least two strictly positive finite entries.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"endowments must be a 1-D vector, got shape {a.shape}")
    if a.size < 2:
        raise ValueError("need at least two peers")
    if not np.all(np.isfinite(a)):
        raise ValueError("endowments must be finite")
    if np.any(a <= 0):
        raise ValueError("endowments must be strictly positive")
    return a


def check_allocation(X, a, rtol: float = COLUMN_FEASIBILITY_RTOL) -> np.ndarray:
    """Validate an allocation matrix against its endowment vector.

    X[i, j] is the amount peer j gives to peer i, so column j must sum to
    a_j (each peer hands out its whole endowment). Checks shape, a zero
    diagonal, nonnegativity, and column feasibility within rtol * a_j.
    """
    a = check_endowments(a)
    X = np.asarray(X, dtype=float)
    n = a.size
    if X.shape != (n, n):
        raise ValueError(f"allocation must be {n}x{n}, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("allocation entries must be finite")
    if np.any(np.diag(X) != 0):
        raise ValueError("self-allocation is not allowed (diagonal must be zero)")
    if np.any(X < 0):
        raise ValueError("allocation entries must be nonnegative")
    col_err = np.abs(X.sum(axis=0) - a)
    bad = col_err > rtol * a
    if np.any(bad):
        j = int(np.argmax(col_err / a))
        raise ValueError(
            f"column {j} sums to {X[:, j].sum():.17g}, endowment is {a[j]:.17g}"
        )
    return X


def check_theta(theta) -> float:
    """Validate a minimum exchange-ratio target, a real in (0, 1]."""
    theta = float(theta)
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    return theta
