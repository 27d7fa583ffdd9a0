import numpy as np
import pytest

from sparse_exchange import (
    EGSPARSE,
    PR,
    SPARSE,
    DegenerateStateError,
    MarketState,
    RunConfig,
    SparsityParams,
    egsparse_multipliers,
    egsparse_step,
    penalized_objective,
    pr_step,
    run,
    sparse_prices,
    sparse_step,
    sparse_step_bids,
    sparse_step_multiplicative,
)
from sparse_exchange.scenario import RANDOM, init_allocation, sample_endowments

A211 = np.array([2.0, 1.0, 1.0])
P01 = SparsityParams(c=0.1, eps=0.01, tau=0.01)


def equal_state(a):
    n = a.size
    X = np.tile(a / (n - 1), (n, 1))
    np.fill_diagonal(X, 0.0)
    return MarketState(X, a)


def random_state(n, seed):
    a = sample_endowments(n, seed=seed)
    X = init_allocation(a, RANDOM, seed=seed + 50_000)
    return MarketState(X, a)


# Frozen reference matrices below come from an independent scalar reference
# evaluation (50-digit arithmetic) of the N=3, a=(2,1,1) equal-split start.

PR1 = np.array([[0.0, 0.75, 0.75], [1.0, 0.0, 0.25], [1.0, 0.25, 0.0]])
PR2 = np.array(
    [
        [0.0, 0.83333333333333333, 0.83333333333333333],
        [1.0, 0.0, 0.16666666666666667],
        [1.0, 0.16666666666666667, 0.0],
    ]
)
SP2 = np.array(
    [
        [0.0, 0.86558509305055692, 0.86558509305055692],
        [1.0, 0.0, 0.13441490694944308],
        [1.0, 0.13441490694944308, 0.0],
    ]
)
EG2 = np.array(
    [
        [0.0, 0.85888963955398358, 0.85888963955398358],
        [1.0, 0.0, 0.14111036044601642],
        [1.0, 0.14111036044601642, 0.0],
    ]
)
LAM1 = np.array([0.56765676567656766, 1.1372549019607843, 1.1372549019607843])
LAM2 = np.array([0.70099009900990099, 1.0327149897656841, 1.0327149897656841])


def test_pr_step_two_iterations():
    st = equal_state(A211)
    X1 = pr_step(st)
    assert np.allclose(X1, PR1, rtol=1e-14, atol=1e-15)
    X2 = pr_step(MarketState(X1, A211, 1))
    assert np.allclose(X2, PR2, rtol=1e-14, atol=1e-15)


def test_sparse_step_two_iterations():
    st = equal_state(A211)
    X1 = sparse_step(st, P01)
    # at an equal split the within-column penalty factors cancel, so the
    # first sparse step coincides with plain proportional response
    assert np.allclose(X1, PR1, rtol=1e-14, atol=1e-15)
    X2 = sparse_step(MarketState(X1, A211, 1), P01)
    assert np.allclose(X2, SP2, rtol=1e-13, atol=1e-15)


def test_egsparse_step_two_iterations():
    st = equal_state(A211)
    lam, resid = egsparse_multipliers(st, P01)
    assert np.allclose(lam, LAM1, rtol=1e-13)
    assert np.all(resid <= 1e-10 * A211)
    X1 = egsparse_step(st, P01)
    assert np.allclose(X1, PR1, rtol=1e-13, atol=1e-15)
    st1 = MarketState(X1, A211, 1)
    lam2, _ = egsparse_multipliers(st1, P01)
    assert np.allclose(lam2, LAM2, rtol=1e-13)
    X2 = egsparse_step(st1, P01)
    assert np.allclose(X2, EG2, rtol=1e-13, atol=1e-15)


def test_penalized_objective_trajectory():
    st = equal_state(A211)
    f0 = penalized_objective(st.X, A211, P01)
    assert f0 == pytest.approx(0.25590038862967521, rel=1e-13)
    X1 = sparse_step(st, P01)
    f1 = penalized_objective(X1, A211, P01)
    assert f1 == pytest.approx(-0.19597626295518731, rel=1e-13)
    X2 = sparse_step(MarketState(X1, A211, 1), P01)
    f2 = penalized_objective(X2, A211, P01)
    assert f2 == pytest.approx(-0.37535114791781192, rel=1e-13)
    assert f1 < f0 and f2 < f1


def test_sparse_prices_formula():
    st = equal_state(A211)
    mu = sparse_prices(st, P01)
    # giver 1's price for receiver 2: rho_2 * exp(c/(eps + x_21))
    assert mu[1, 2] == pytest.approx(1.5 * 1.2166223229510628, rel=1e-14)
    assert np.all(mu[~np.eye(3, dtype=bool)] > 0)
    assert np.all(np.diag(mu) == 0.0)


def test_route_equivalence_random_states():
    rng = np.random.default_rng(21)
    for k in range(60):
        st = random_state(int(rng.integers(2, 11)), 300 + k)
        params = SparsityParams(c=float(rng.uniform(0.01, 0.5)), eps=0.01, tau=0.01)
        A = sparse_step_bids(st, params)
        B = sparse_step_multiplicative(st, params)
        assert np.allclose(A, B, rtol=1e-12, atol=1e-300)


def test_c_zero_reduces_to_proportional_response():
    zero = SparsityParams(c=0.0, eps=0.01, tau=0.01)
    rng = np.random.default_rng(22)
    for k in range(20):
        st = random_state(int(rng.integers(2, 11)), 600 + k)
        P = pr_step(st)
        assert np.allclose(sparse_step(st, zero), P, rtol=1e-12)
        assert np.allclose(egsparse_step(st, zero), P, rtol=1e-12)


def test_lambda_budget_residuals():
    for k in range(10):
        st = random_state(6, 900 + k)
        lam, resid = egsparse_multipliers(st, P01)
        assert np.all(resid <= 1e-10 * st.a)
        X = egsparse_step(st, P01)
        assert np.allclose(X.sum(axis=0), st.a, rtol=1e-12)


def test_underflow_falls_back_to_log_domain():
    # c/(eps + x) > 700 for the tiny entry, so the plain multiplicative
    # route underflows and both routes must agree through the rebuilt path
    X = np.array([[0.0, 0.999, 0.999], [1.9999, 0.0, 0.001], [0.0001, 0.001, 0.0]])
    st = MarketState(X, A211)
    params = SparsityParams(c=10.0, eps=0.01, tau=0.01)
    A = sparse_step_bids(st, params)
    B = sparse_step_multiplicative(st, params)
    assert np.all(np.isfinite(A))
    assert np.allclose(A.sum(axis=0), A211, rtol=1e-12)
    assert np.allclose(A, B, rtol=1e-12, atol=1e-300)


def test_degenerate_receive_vector_raises():
    # peer 2 receives nothing, so its exchange ratio is zero
    X = np.array([[0.0, 1.0, 1.0], [2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    st = MarketState(X, A211)
    with pytest.raises(DegenerateStateError):
        pr_step(st)
    cfg = RunConfig(max_iters=5, algorithm=PR)
    with pytest.raises(DegenerateStateError, match="iteration"):
        run(st, cfg)


def test_run_converges_immediately_on_fixed_point():
    st = equal_state(np.ones(3))
    cfg = RunConfig(max_iters=50, conv_tol=1e-8, algorithm=SPARSE, params=P01)
    final, records = run(st, cfg)
    assert final.t == 1
    assert records[-1].step_delta == 0.0


def test_run_perfect_reciprocation_ones():
    st = equal_state(np.ones(4))
    cfg = RunConfig(max_iters=100, conv_tol=1e-10, algorithm=PR)
    final, records = run(st, cfg)
    rho = final.X.sum(axis=1) / final.a
    assert np.all(np.abs(rho - 1.0) <= 1e-6)


def test_run_records_schedule():
    st = random_state(5, 1234)
    cfg = RunConfig(max_iters=250, conv_tol=1e-300, algorithm=SPARSE, params=P01, record_every=100)
    final, records = run(st, cfg)
    assert final.t == 250
    assert [m.t for m in records] == [100, 200, 250]
    assert np.allclose(final.X.sum(axis=0), final.a, rtol=1e-9)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(max_iters=0)
    with pytest.raises(ValueError):
        RunConfig(max_iters=10, conv_tol=0.0)
    with pytest.raises(ValueError):
        RunConfig(max_iters=10, algorithm="newton")
    with pytest.raises(ValueError):
        RunConfig(max_iters=10, record_every=0)
    assert set([PR, SPARSE, EGSPARSE]) == {"pr", "sparse", "egsparse"}
