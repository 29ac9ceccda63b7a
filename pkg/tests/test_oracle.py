import numpy as np
import pytest

from clusterperf.model import ProbabilityField, SystemParams, metrics_from
from clusterperf.oracle import (
    OracleCapExceeded,
    ReducibleChainError,
    SparseGenerator,
    balance_residual,
    build_generator,
    stationary,
)

from conftest import random_instances


def dense_stationary(Q: np.ndarray) -> np.ndarray:
    """Brute force: solve pi Q = 0 with one balance equation replaced by sum(pi) = 1."""
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(len(Q))
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def test_head_only_chain():
    p = SystemParams(S=1, L=1, lam=1.0, mu=1.0, xi=0.0, xi_h=0.2, eta=1.0, eta_h=0.6)
    g = build_generator(p)
    assert g.dimension == 4
    f = stationary(g)
    assert f.plane1.sum() == pytest.approx(0.6 / 0.8, abs=1e-15)


def test_two_state_on_off_generator():
    # With L = 0 only the head on/off chain remains. L >= S forbids this through
    # SystemParams, so build the generator by hand.
    import scipy.sparse as sp

    a, b = 0.3, 0.9
    q = sp.csr_matrix(np.array([[-b, b], [a, -a]]))  # flat order: (1,0,1) first, then (0,0,0)
    f = stationary(SparseGenerator(1, 0, q))
    assert f.plane1[0, 0] == pytest.approx(a / (a + b), abs=1e-15)
    assert f.plane0[0, 0] == pytest.approx(b / (a + b), abs=1e-15)


def test_generator_rows_sum_to_zero():
    p = SystemParams(S=2, L=2, lam=1.0, mu=0.25, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5)
    g = build_generator(p)
    assert g.dimension == 12
    Q = g.dense()
    assert np.abs(Q.sum(axis=1)).max() <= 1e-12
    off = Q - np.diag(np.diag(Q))
    assert (off >= 0).all()


def test_cap():
    p = SystemParams(S=1000, L=2000, lam=70, mu=0.25, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5)
    with pytest.raises(OracleCapExceeded, match="too large"):
        build_generator(p)
    with pytest.raises(OracleCapExceeded):
        build_generator(SystemParams(S=3, L=6, lam=1, mu=1, xi=1, xi_h=1, eta=1, eta_h=1), cap=10)


def test_small_instance_residual():
    p = SystemParams(S=2, L=2, lam=1.0, mu=0.25, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5)
    g = build_generator(p)
    f = stationary(g)
    assert balance_residual(g, f) <= 1e-12


@pytest.mark.parametrize("p", random_instances(16, seed=21))
def test_matches_dense_solve(p):
    g = build_generator(p)
    assert g.dimension <= 200
    f = stationary(g)
    ref = dense_stationary(g.dense())
    assert np.allclose(f.flat, ref, rtol=1e-8, atol=1e-13)
    assert (f.flat >= 0).all()
    assert f.total() == pytest.approx(1.0, abs=1e-12)
    assert f.plane1.sum() == pytest.approx(p.eta_h / (p.eta_h + p.xi_h), abs=1e-10)


def test_stiff_rates_stay_positive():
    p = SystemParams(S=50, L=100, lam=70.0, mu=0.25, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5)
    g = build_generator(p)
    f = stationary(g)
    assert (f.flat > 0).all()
    assert balance_residual(g, f) <= 1e-12
    m = metrics_from(f, p)
    assert abs(m.thrp - p.lam * (1 - m.p_block)) / m.thrp <= 1e-10


def test_reducible_chain_reports_absorbing_sets():
    import scipy.sparse as sp

    # S=1, L=1: flat states (1,0,1), (1,1,1), (0,0,0), (0,1,0); the first leaks
    # into two absorbing states
    q = np.zeros((4, 4))
    q[0, 1] = q[0, 2] = 1.0
    q[3, 0] = 1.0
    np.fill_diagonal(q, -q.sum(axis=1))
    with pytest.raises(ReducibleChainError) as e:
        stationary(SparseGenerator(1, 1, sp.csr_matrix(q)))
    assert sorted(e.value.absorbing) == [[(0, 0, 0)], [(1, 1, 1)]]


def test_failure_free_nodes_leave_transient_states():
    p = SystemParams(S=3, L=4, lam=1.0, mu=0.5, xi=0.0, xi_h=0.1, eta=0.5, eta_h=0.4)
    g = build_generator(p)
    f = stationary(g)
    assert balance_residual(g, f) <= 1e-12
    assert f.plane1[:2].sum() == 0 and f.plane0[:2].sum() == 0
    assert f.plane1[2].sum() == pytest.approx(0.8, abs=1e-12)
    assert f.plane0[2].sum() == pytest.approx(0.2, abs=1e-12)


def test_unknown_field_shape_rejected():
    with pytest.raises(ValueError):
        ProbabilityField(2, 2, np.zeros(5))
