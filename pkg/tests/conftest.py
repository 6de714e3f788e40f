import numpy as np
import pytest
from hypothesis import strategies as st

from eipstab.netmodel import Bus, Line, Network
from eipstab.sim import gen_synthetic_feeder


def two_bus(d=(2.6, 2.6), g=3.0, b=4.0, alpha=1.0, tau=(1.0, 1.0), delta_star=(0.0, 0.0), p_star=(0.0, 0.0)):
    buses = tuple(
        Bus(k + 1, tau[k], d[k], delta_star[k], p_star[k]) for k in range(2)
    )
    return Network(buses, (Line(1, 1, 2, g, b, alpha),))


def three_bus(g=(1.0, 2.0, 3.0), b=(4.0, 5.0, 6.0), alpha=(0.5, 1.0, 1.5), d=(5.0, 5.0, 5.0)):
    buses = tuple(Bus(k + 1, 1.0, d[k]) for k in range(3))
    pairs = [(1, 2), (1, 3), (2, 3)]
    lines = tuple(
        Line(l + 1, i, j, g[l], b[l], alpha[l]) for l, (i, j) in enumerate(pairs)
    )
    return Network(buses, lines)


@pytest.fixture
def twobus():
    return two_bus()


@pytest.fixture
def threebus():
    return three_bus()


def random_network(seed: int, n_max: int = 50, lossless: bool = False) -> Network:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    topo = "meshed" if rng.random() < 0.5 else "radial"
    net = gen_synthetic_feeder(n, topo, seed=seed)
    alphas = rng.uniform(0.1, 2.0, net.m)
    net = net.with_alphas(alphas).with_damping(rng.uniform(0.5, 5.0, n))
    if lossless:
        from dataclasses import replace

        net = Network(net.buses, tuple(replace(ln, g=0.0) for ln in net.lines))
    return net


@st.composite
def networks(draw, n_max=12):
    seed = draw(st.integers(0, 2**31 - 1))
    return random_network(seed, n_max)


# one summary line per acceptance criterion, whatever the verbosity
_acceptance = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance.items(), key=lambda kv: int(kv[0].split("_")[1])):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
