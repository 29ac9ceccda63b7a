import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterperf.approx import (
    column_conditional,
    column_conditionals,
    decompose,
    initial_field,
    operative_marginal,
    plane_masses,
)
from clusterperf.model import Semantics, SystemParams
from clusterperf.solver import SolverConfig, solve

from conftest import random_instances


def params(**kw):
    d = dict(S=3, L=6, lam=1.0, mu=0.5, xi=0.01, xi_h=0.001, eta=0.5, eta_h=0.5)
    d.update(kw)
    return SystemParams(**d)


def test_plane_masses_symmetric():
    assert plane_masses(params(xi_h=0.3, eta_h=0.3)) == (0.5, 0.5)


def test_plane_masses_base_rates():
    m0, m1 = plane_masses(params(xi_h=0.001, eta_h=0.5))
    assert m0 == pytest.approx(0.001 / 0.501, rel=1e-15)
    assert m1 == pytest.approx(0.5 / 0.501, rel=1e-15)
    assert m0 == pytest.approx(0.0019960, abs=1e-7) and m1 == pytest.approx(0.9980040, abs=1e-7)
    assert m0 + m1 == 1.0


def test_single_column_marginal():
    p = params(S=1, L=3)
    assert operative_marginal(p) == pytest.approx([plane_masses(p)[1]])


def test_marginal_recursion_paper_literal():
    p = params(S=3, xi=0.25, eta=0.5)  # eta/xi = 2
    _, m1 = plane_masses(p)
    expected = np.array([1.0, 1.0, 2 / 3]) * m1 / (8 / 3)
    assert operative_marginal(p) == pytest.approx(expected, rel=1e-14)


def test_marginal_recursion_per_node():
    p = params(S=3, xi=0.25, eta=0.5, semantics=Semantics.PER_COMPUTING_NODE)
    _, m1 = plane_masses(p)
    # w_i ~ (eta/xi)^(i-1)/(i-1)!: 1, 2, 2
    assert operative_marginal(p) == pytest.approx(np.array([1.0, 2.0, 2.0]) * m1 / 5, rel=1e-14)


def test_marginal_matches_factorial_form():
    p = params(S=8, xi=0.1, eta=0.35)
    r = p.eta / p.xi
    w = np.array([r ** (i - 1) / math.factorial(i) for i in range(1, 9)])
    assert operative_marginal(p) == pytest.approx(w / w.sum() * plane_masses(p)[1], rel=1e-12)


def test_failure_free_marginal():
    p = params(S=4, xi=0.0)
    assert operative_marginal(p).tolist() == [0, 0, 0, plane_masses(p)[1]]


def test_single_server_column_is_truncated_geometric():
    p = params(S=3, L=5, lam=0.3, mu=0.5)
    w = 0.6 ** np.arange(6)
    assert column_conditional(1, p) == pytest.approx(w / w.sum(), rel=1e-13)


def test_two_server_column_hand_values():
    p = params(S=2, L=3, lam=1.0, mu=1.0)
    assert column_conditional(2, p) == pytest.approx(np.array([1, 1, 0.5, 0.25]) / 2.75, rel=1e-14)


def test_two_server_column_at_rho_equal_servers():
    p = params(S=2, L=3, lam=2.0, mu=1.0)
    assert column_conditional(2, p) == pytest.approx(np.array([1, 2, 2, 2]) / 7, rel=1e-14)


def test_column_bounds_checked():
    with pytest.raises(ValueError):
        column_conditional(0, params())
    with pytest.raises(ValueError):
        column_conditional(4, params())


def test_conditionals_finite_at_scale():
    p = SystemParams(S=2000, L=5000, lam=100.0, mu=0.01, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5)
    c = column_conditionals(p)
    assert np.isfinite(c).all() and (c >= 0).all()
    assert np.abs(c.sum(axis=1) - 1).max() <= 1e-12
    assert np.isfinite(operative_marginal(p)).all()


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(0, 40), st.floats(1e-3, 1e3), st.floats(1e-3, 1e2),
       st.floats(0, 10), st.sampled_from(list(Semantics)))
def test_decomposition_invariants(S, extra, rho, eta, xi, sem):
    p = SystemParams(S=S, L=S + extra, lam=rho, mu=1.0, xi=xi, xi_h=0.01, eta=eta, eta_h=0.3,
                     semantics=sem)
    d = decompose(p)
    assert d.m0 + d.m1 == pytest.approx(1.0, abs=1e-15)
    assert d.marginal_i.sum() == pytest.approx(d.m1, rel=1e-12)
    assert np.abs(d.conditional_j.sum(axis=1) - 1).max() <= 1e-12
    assert (d.marginal_i >= 0).all() and (d.conditional_j >= 0).all()
    assert d.rho == rho


def test_initial_field_tiny():
    p = params(S=1, L=1, xi_h=0.2, eta_h=0.2)
    f = initial_field(p)
    assert f.plane1.sum() == pytest.approx(0.5) and f.plane0.sum() == pytest.approx(0.5)
    assert f.plane0[0] == pytest.approx([0.25, 0.25])


@pytest.mark.parametrize("p", random_instances(8, seed=5))
def test_initial_field_normalised(p):
    assert initial_field(p).total() == pytest.approx(1.0, abs=1e-12)


def test_initial_field_is_product_of_factors():
    p = params(S=3, L=6)
    f = initial_field(p)
    marg = operative_marginal(p)
    for i in range(1, 4):
        assert f.plane1[i - 1] == pytest.approx(marg[i - 1] * column_conditional(i, p), rel=1e-14)
    assert f.plane0 == pytest.approx(np.full((3, 7), plane_masses(p)[0] / 21), rel=1e-14)


BENCH = [
    SystemParams(S=4, L=10, lam=1.0, mu=0.5, xi=0.01, xi_h=0.001, eta=0.5, eta_h=0.5),
    SystemParams(S=10, L=30, lam=3.0, mu=0.5, xi=0.002, xi_h=0.001, eta=0.5, eta_h=0.5),
    SystemParams(S=20, L=50, lam=4.0, mu=0.25, xi=0.001, xi_h=0.001, eta=0.5, eta_h=0.5),
]


@pytest.mark.parametrize("p", BENCH)
def test_warm_start_needs_fewer_sweeps_than_uniform(p):
    from clusterperf.model import ProbabilityField

    cfg = SolverConfig(delta=1e-8, max_iterations=100_000)
    _, _, warm = solve(p, cfg)
    _, _, cold = solve(p, cfg, initial=ProbabilityField.uniform(p.S, p.L))
    assert warm.converged and cold.converged
    assert warm.iterations < cold.iterations
