import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eipstab.certify import (
    LyapunovWeights,
    certify_theorem1,
    identity_weights,
    q_matrix,
    verify_lemma1,
)
from eipstab.eip import eip_profile
from eipstab.interconnect import build_matrices
from eipstab.netmodel import Network
from conftest import random_network, three_bus, two_bus

J = np.ones((2, 2))


def test_q_two_bus():
    net = two_bus()
    q = q_matrix(net)
    # oracle: explicit Psi diag(1/eps) Psi^T / 4 with Psi = -[[1, 1], [1, 1]], eps = 0.4
    psi = -J
    expected = psi @ np.diag([1 / 0.4, 1 / 0.4]) @ psi.T / 4
    np.testing.assert_allclose(q, expected, rtol=1e-15)
    np.testing.assert_allclose(q, 1.25 * J, rtol=1e-15)


def test_q_lossless_vanishes_with_alpha():
    net = two_bus(g=0.0, b=2.0, alpha=1e-6)
    q = q_matrix(net)
    assert np.max(np.abs(q)) <= (1e-6) ** 2 * 2.0 / 4 * (1 + 1e-12)


def test_q_is_signless_laplacian():
    """Each line adds w (e_i + e_j)(e_i + e_j)^T with w = alpha * hypot(g, b alpha) / 4."""
    net = three_bus()
    q = np.zeros((3, 3))
    for ln in net.lines:
        e = np.zeros(3)
        e[[ln.from_bus - 1, ln.to_bus - 1]] = 1
        q += ln.alpha * np.hypot(ln.g, ln.b * ln.alpha) / 4 * np.outer(e, e)
    np.testing.assert_allclose(q_matrix(net), q, rtol=1e-14)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_q_psd(seed):
    q = q_matrix(random_network(seed, n_max=20))
    assert np.min(np.linalg.eigvalsh(q)) >= -1e-12 * max(1, np.linalg.norm(q))


@pytest.mark.parametrize("d, feasible, margin", [(2.6, True, 0.1), (2.4, False, -0.1)])
def test_certificate_two_bus(d, feasible, margin):
    rep = certify_theorem1(two_bus(d=(d, d)))
    assert rep.feasible is feasible
    assert rep.margin == pytest.approx(margin, abs=1e-12)
    assert (rep.sigma is not None) is feasible
    np.testing.assert_allclose(rep.per_bus_slack, [d - 1.25, d - 1.25])


def test_sigma_two_bus():
    rep = certify_theorem1(two_bus(d=(3.0, 3.0)))
    # 2 diag(d) - 2Q = 6I - 2.5 J has eigenvalues 1 and 6
    assert rep.sigma == pytest.approx(0.999, rel=1e-12)


def test_sigma_scales_with_min_tau():
    rep = certify_theorem1(two_bus(d=(3.0, 3.0), tau=(0.5, 2.0)))
    assert rep.sigma == pytest.approx(0.999 * 0.5, rel=1e-12)


def _weighted(net, c=None):
    mats = build_matrices(net)
    w = identity_weights(mats) if c is None else LyapunovWeights(c)
    return verify_lemma1(mats, eip_profile(net), w)


@pytest.mark.parametrize("d", [2.4, 2.6, 3.0, 10.0])
def test_weighted_identity_matches_certificate(d):
    net = two_bus(d=(d, d))
    assert _weighted(net)[0] == certify_theorem1(net).feasible


def test_weighted_huge_damping():
    net = random_network(7, n_max=15)
    net = net.with_damping(np.full(net.n, 1e6))
    assert _weighted(net)[0]


def test_weighted_scale_invariant():
    net = random_network(11, n_max=10)
    size = net.n + 2 * net.m
    c = np.random.default_rng(0).uniform(0.5, 2, size)
    ok, lam = _weighted(net, c)
    ok2, lam2 = _weighted(net, 7.5 * c)
    assert ok == ok2
    assert lam2 == pytest.approx(7.5 * lam, rel=1e-9)


def test_weighted_refuses_large_networks():
    mats = build_matrices(random_network(1, n_max=5), dense=False)
    with pytest.raises(ValueError, match="certify_theorem1"):
        verify_lemma1(mats, None, LyapunovWeights(np.ones(mats.size)))


def test_weights_validated():
    with pytest.raises(ValueError):
        LyapunovWeights([1.0, 0.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.2, 3.0))
def test_identity_weights_equivalence(seed, scale):
    net = random_network(seed, n_max=10)
    q = q_matrix(net)
    # put the damping on either side of the bound, away from it
    lam = np.max(np.linalg.eigvalsh(q))
    net = net.with_damping(np.full(net.n, scale * lam + 1e-3))
    rep = certify_theorem1(net, q)
    if abs(rep.margin) > 1e-6:
        assert _weighted(net)[0] == rep.feasible


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 100), bump=st.floats(0, 5))
def test_margin_monotone_in_damping(seed, k, bump):
    net = random_network(seed, n_max=12)
    q = q_matrix(net)
    before = certify_theorem1(net, q).margin
    d = net.damping.copy()
    d[k % net.n] += bump
    after = certify_theorem1(net.with_damping(d), q).margin
    assert after >= before - 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), kappa=st.floats(0.1, 10))
def test_scale_covariance(seed, kappa):
    from dataclasses import replace

    net = random_network(seed, n_max=10)
    scaled = Network(
        tuple(replace(b, d_a=kappa * b.d_a) for b in net.buses),
        tuple(replace(ln, g=kappa * ln.g, b=kappa * ln.b) for ln in net.lines),
    )
    r0, r1 = certify_theorem1(net), certify_theorem1(scaled)
    assert r1.margin == pytest.approx(kappa * r0.margin, rel=1e-9, abs=1e-12)
    if abs(r0.margin) > 1e-6:
        assert r0.feasible == r1.feasible


@pytest.mark.parametrize("n", [2, 5, 20])
def test_lossless_any_damping(n):
    from dataclasses import replace

    net = random_network(n, n_max=n)
    net = Network(
        tuple(replace(b, d_a=1e-3) for b in net.buses),
        tuple(replace(ln, g=0.0, alpha=1e-6) for ln in net.lines),
    )
    assert certify_theorem1(net).feasible
