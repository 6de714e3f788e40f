import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eipstab.certify import certify_theorem1, q_matrix
from eipstab.dampopt import (
    SolverError,
    damping_for_margin,
    pareto_sweep,
    solve_min_damping,
)
from eipstab.netmodel import Network
from eipstab.sim import gen_synthetic_feeder
from conftest import random_network, two_bus
from oracles import min_damping_grid


def test_zero_bound_gives_floor():
    sol = solve_min_damping(np.zeros((3, 3)))
    assert np.all(sol.d > 0) and np.all(sol.d <= 1e-8)
    np.testing.assert_array_equal(sol.d, sol.d[0])


def test_two_bus_closed_form():
    sol = solve_min_damping(1.25 * np.ones((2, 2)))
    np.testing.assert_allclose(sol.d, [2.5, 2.5], rtol=1e-6)
    assert sol.objective == pytest.approx(2.5 * math.sqrt(2), rel=1e-6)
    assert sol.margin >= 0 and sol.converged


def test_two_bus_grid_oracle():
    val, d = min_damping_grid(1.25 * np.ones((2, 2)))
    np.testing.assert_allclose(d, [2.5, 2.5], rtol=1e-6)


def test_diagonal_bound():
    q = np.diag([0.3, 1.7, 4.0])
    sol = solve_min_damping(q)
    assert sol.objective == pytest.approx(np.linalg.norm(np.diag(q)), rel=1e-8)
    # small coordinates barely move the norm, so they converge more loosely
    np.testing.assert_allclose(sol.d, np.diag(q), rtol=1e-6)


def test_rejects_indefinite_and_bad_tol():
    with pytest.raises(SolverError):
        solve_min_damping(np.array([[1.0, 0], [0, -1.0]]))
    with pytest.raises(ValueError):
        solve_min_damping(np.eye(2), gap_tol=0.5)


def test_l1_variant():
    sol = solve_min_damping(1.25 * np.ones((2, 2)), norm="l1")
    assert sol.objective == pytest.approx(5.0, rel=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_three_bus_oracle(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    q = a @ a.T
    sol = solve_min_damping(q)
    val, _ = min_damping_grid(q)
    assert sol.objective == pytest.approx(val, rel=1e-5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_feasible_and_sandwiched(seed):
    net = random_network(seed, n_max=15)
    q = q_matrix(net)
    sol = solve_min_damping(q)
    assert certify_theorem1(net.with_damping(sol.d), q).feasible
    assert np.all(sol.d >= np.diag(q) - 1e-12)
    upper = math.sqrt(net.n) * np.max(np.linalg.eigvalsh(q))
    assert sol.objective <= upper + 1e-6 * upper
    assert np.min(np.linalg.eigvalsh(np.diag(sol.d) - q)) >= -1e-8 * (1 + np.linalg.norm(q))


def test_permutation_equivariance():
    net = random_network(3, n_max=8)
    q = q_matrix(net)
    perm = np.random.default_rng(0).permutation(net.n)
    d = solve_min_damping(q).d
    d_perm = solve_min_damping(q[np.ix_(perm, perm)]).d
    np.testing.assert_allclose(d_perm, d[perm], rtol=1e-6)


def test_pareto_two_bus_closed_form():
    net = two_bus()
    alphas = np.array([0.5, 1.0, 2.0])
    pts = pareto_sweep(net, 1, 0.5, 2.0, 3)
    np.testing.assert_allclose([p.alpha for p in pts], alphas, rtol=1e-12)
    per_bus = alphas * np.hypot(3.0, 4.0 * alphas) / 2
    np.testing.assert_allclose([p.min_damping_norm for p in pts], math.sqrt(2) * per_bus, rtol=1e-6)
    assert pts[1].min_damping_norm == pytest.approx(2.5 * math.sqrt(2), rel=1e-6)
    assert pts[2].min_damping_norm == pytest.approx(math.sqrt(2) * math.sqrt(73), rel=1e-6)
    assert all(p.feasible for p in pts)


def test_pareto_lossless_line():
    from dataclasses import replace

    net = random_network(4, n_max=6)
    lines = list(net.lines)
    lines[0] = replace(lines[0], g=0.0)
    net = Network(net.buses, tuple(lines))
    pts = pareto_sweep(net, lines[0].id, 0.1, 2.0, 6)
    assert all(p.region_width == pytest.approx(2 * math.pi) for p in pts)
    assert all(p.gamma == 0.0 for p in pts)


def test_pareto_monotone_and_ordered():
    net = gen_synthetic_feeder(6, "meshed", seed=2)
    pts = pareto_sweep(net, net.lines[0].id, 0.1, 2.0, 12, threads=3)
    alphas = [p.alpha for p in pts]
    assert alphas == sorted(alphas)
    widths = np.array([p.region_width for p in pts])
    norms = np.array([p.min_damping_norm for p in pts])
    assert np.all(np.diff(widths) > 0)
    assert np.all(np.diff(norms) >= -1e-8 * norms[1:])


def test_pareto_bad_line():
    with pytest.raises(ValueError):
        pareto_sweep(two_bus(), 99)


def test_damping_for_margin_two_bus():
    alphas, sol = damping_for_margin(two_bus(), math.pi / 2)
    assert alphas[0] == pytest.approx(0.75, rel=1e-15)
    expected = 0.75 * math.sqrt(18) / 2
    np.testing.assert_allclose(sol.d, [expected, expected], rtol=1e-6)
    assert expected == pytest.approx(1.59099, abs=5e-6)


def test_damping_for_margin_lossless():
    net = two_bus(g=0.0)
    alphas, sol = damping_for_margin(net, 1.0)
    assert alphas[0] > 0 and alphas[0] <= 1e-8
    assert np.all(sol.d <= 1e-8)


def test_damping_for_margin_rejects_bad_beta():
    with pytest.raises(ValueError):
        damping_for_margin(two_bus(), math.pi)


def test_margin_increase_never_lowers_norm():
    net = gen_synthetic_feeder(5, "radial", seed=9)
    betas = np.linspace(0.2, 2.0, 8)
    norms = []
    for beta in betas:
        per_line = np.full(net.m, 0.5)
        per_line[0] = beta
        norms.append(damping_for_margin(net, per_line)[1].objective)
    assert np.all(np.diff(norms) >= -1e-8 * np.array(norms[1:]))
