import numpy as np
import pytest

from sparse_exchange import StandardFormLP, lp_feasible, lp_solve
from sparse_exchange.simplex import INFEASIBLE, NUMERIC_FAILURE, OPTIMAL, UNBOUNDED


def test_min_x_above_floor():
    lp = StandardFormLP(np.array([[1.0]]), np.array([3.0]), np.array([1.0]), ("ge",))
    res = lp_solve(lp)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(3.0, abs=1e-12)
    assert res.objective == pytest.approx(3.0, abs=1e-12)


def test_infeasible_pair():
    # x + y = 1 and x >= 2 cannot both hold with x, y >= 0
    A = np.array([[1.0, 1.0], [1.0, 0.0]])
    lp = StandardFormLP(A, np.array([1.0, 2.0]), np.zeros(2), ("eq", "ge"))
    res = lp_solve(lp)
    assert res.status == INFEASIBLE
    assert not lp_feasible(lp)


def test_unbounded():
    lp = StandardFormLP(np.array([[1.0]]), np.array([0.0]), np.array([-1.0]), ("ge",))
    res = lp_solve(lp)
    assert res.status == UNBOUNDED


def test_le_rows_and_negative_rhs():
    # max x (i.e. min -x) subject to x <= 5 written with a negated row
    lp = StandardFormLP(np.array([[-1.0]]), np.array([-5.0]), np.array([-1.0]), ("ge",))
    res = lp_solve(lp)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(5.0, abs=1e-12)
    lp2 = StandardFormLP(np.array([[1.0]]), np.array([5.0]), np.array([-1.0]), ("le",))
    res2 = lp_solve(lp2)
    assert res2.status == OPTIMAL
    assert res2.x[0] == pytest.approx(5.0, abs=1e-12)


def _transport_lp(a, theta, cost):
    """Allocation polytope LP: column budgets and receive floors."""
    n = a.size
    cells = [(i, j) for i in range(n) for j in range(n) if i != j]
    A = np.zeros((2 * n, len(cells)))
    for v, (i, j) in enumerate(cells):
        A[j, v] = 1.0
        A[n + i, v] = 1.0
    b = np.concatenate([a, theta * a])
    return StandardFormLP(A, b, cost, ("eq",) * n + ("ge",) * n)


def test_optimal_certificates_on_random_polytopes():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        a = rng.uniform(0.5, 3.0, n)
        a = np.minimum(a, 0.9 * (a.sum() - a))  # keep theta=0.8 feasible
        cost = rng.uniform(0.1, 2.0, n * (n - 1))
        lp = _transport_lp(a, 0.8, cost)
        res = lp_solve(lp)
        assert res.status == OPTIMAL
        scale = 1.0 + np.abs(lp.b)
        resid = lp.A @ res.x - lp.b
        for r, s, sense in zip(resid, scale, lp.sense):
            if sense == "eq":
                assert abs(r) <= 1e-8 * s
            elif sense == "ge":
                assert r >= -1e-8 * s
            else:
                assert r <= 1e-8 * s
        assert res.objective == pytest.approx(float(lp.cost @ res.x), abs=1e-9)
        assert np.all(res.x >= -1e-12)


def test_deterministic_pivoting():
    rng = np.random.default_rng(9)
    a = rng.uniform(0.5, 3.0, 4)
    a = np.minimum(a, 0.9 * (a.sum() - a))
    cost = rng.uniform(0.1, 2.0, 12)
    lp = _transport_lp(a, 0.9, cost)
    x1 = lp_solve(lp).x
    x2 = lp_solve(lp).x
    assert x1.tobytes() == x2.tobytes()


def test_degenerate_redundant_rows():
    # duplicated equality rows force artificial eviction through redundancy
    A = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
    lp = StandardFormLP(A, np.array([1.0, 1.0, 0.25]), np.array([1.0, 2.0]), ("eq", "eq", "eq"))
    res = lp_solve(lp)
    assert res.status == OPTIMAL
    assert res.x[0] == pytest.approx(0.25, abs=1e-10)
    assert res.x[1] == pytest.approx(0.75, abs=1e-10)


def test_validation():
    with pytest.raises(ValueError):
        StandardFormLP(np.zeros((2, 2)), np.zeros(3), np.zeros(2), ("eq", "eq"))
    with pytest.raises(ValueError):
        StandardFormLP(np.zeros((1, 1)), np.zeros(1), np.zeros(1), ("what",))
    with pytest.raises(ValueError):
        StandardFormLP(np.array([[np.inf]]), np.zeros(1), np.zeros(1), ("eq",))
    assert NUMERIC_FAILURE == "numeric_failure"
