"""Closed-loop angle-droop simulation with Lyapunov monitoring."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interconnect import InterconnectionMatrices, apply_interconnection, line_outputs
from .netmodel import AngleState, Bus, Line, Network, injections

BLOWUP = 1e3


class SimulationError(RuntimeError):
    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 10.0
    dt: float = 1e-3
    record_every: int = 1
    method: str = "rk4"

    def validate(self, net: Network) -> None:
        if self.method != "rk4":
            raise ValueError("only fixed-step RK4 is supported")
        if not (self.t_end > 0 and self.dt > 0):
            raise ValueError("t_end and dt must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.dt > 0.1 * float(np.min(net.tau)):
            raise ValueError(f"dt={self.dt} exceeds 0.1 * min tau_a")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    lyapunov: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.lyapunov)):
            raise ValueError("trajectory arrays have mismatched lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def final(self) -> AngleState:
        return AngleState(self.states[-1])


def _as_array(state) -> np.ndarray:
    return state.delta if isinstance(state, AngleState) else np.asarray(state, dtype=float)


def lyapunov(net: Network, delta) -> np.ndarray:
    """``V = sum_k (delta_k - delta*_k)^2 / (2 tau_k)``; batched on leading dims."""
    err = np.asarray(delta, dtype=float) - net.delta_star
    return np.sum(err**2 / (2.0 * net.tau), axis=-1)


def rhs(net: Network, state) -> np.ndarray:
    delta = _as_array(state)
    drive = -net.damping * (delta - net.delta_star) + net.p_star - injections(net, delta)
    return drive / net.tau


def rhs_modular(net: Network, state, mats: InterconnectionMatrices) -> np.ndarray:
    """Same drift, with the bus inputs taken from the interconnection."""
    delta = _as_array(state)
    y = np.concatenate([delta, line_outputs(net, delta)])
    u = apply_interconnection(mats, y)[: net.n]
    return (-net.damping * (delta - net.delta_star) + net.p_star + u) / net.tau


def simulate(net: Network, initial, cfg: SimConfig = SimConfig()) -> Trajectory:
    """Classical fixed-step RK4; raises SimulationError on blow-up.

    ``initial`` may be a single state or a (k, n) batch integrated together.
    """
    cfg.validate(net)
    x = np.array(_as_array(initial), dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != net.n:
        raise ValueError(f"initial state has shape {x.shape}, expected ({net.n},) or (k, {net.n})")
    steps = int(round(cfg.t_end / cfg.dt))
    h = cfg.dt
    times, states = [0.0], [x.copy()]
    for k in range(1, steps + 1):
        k1 = rhs(net, x)
        k2 = rhs(net, x + 0.5 * h * k1)
        k3 = rhs(net, x + 0.5 * h * k2)
        k4 = rhs(net, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP:
            raise SimulationError(f"state diverged at t={k * h:.6g} s", k * h)
        if k % cfg.record_every == 0 or k == steps:
            times.append(k * h)
            states.append(x.copy())
    states = np.array(states)
    return Trajectory(np.array(times), states, lyapunov(net, states))


def check_exponential_decay(traj: Trajectory, sigma: float, rel: float = 1e-6) -> bool:
    v = traj.lyapunov
    decay = np.exp(-sigma * (traj.times - traj.times[0])).reshape((-1,) + (1,) * (v.ndim - 1))
    return bool(np.all(v <= v[0] * decay * (1 + rel)))


def check_lyapunov_monotone(traj: Trajectory) -> float:
    """Largest increase of V between consecutive samples (0 if never increasing)."""
    if len(traj.lyapunov) < 2:
        return 0.0
    return float(max(np.max(np.diff(traj.lyapunov, axis=0)), 0.0))


def parse_initial(spec: str, net: Network) -> np.ndarray:
    """``"[..]"`` JSON angles, or ``"perturb:<rad>:<seed>"`` uniform about delta*."""
    import json

    if spec.startswith("perturb:"):
        _, amp, seed = spec.split(":")
        rng = np.random.default_rng(int(seed))
        return net.delta_star + rng.uniform(-float(amp), float(amp), net.n)
    values = json.loads(spec)
    arr = np.asarray(values, dtype=float)
    if arr.shape != (net.n,):
        raise ValueError(f"initial state needs {net.n} angles, got {arr.size}")
    return arr


# ---------------------------------------------------------------------------
# Synthetic feeders
# ---------------------------------------------------------------------------

def gen_synthetic_feeder(
    n_buses: int,
    topology: str = "radial",
    seed: int = 0,
    damping: float = 1.0,
    tau: float = 1.0,
    alpha: float = 1.0,
    angle_spread: float = 0.15,
) -> Network:
    """Random connected feeder with setpoints that satisfy the lossy power flow.

    radial: uniform random spanning tree (random attachment order).
    meshed: the tree plus ceil(0.2 n) chords between non-adjacent buses.
    g ~ U[0.5, 5], b ~ U[1, 10], delta* ~ U[-spread, spread].
    """
    if n_buses < 2:
        raise ValueError("need at least two buses")
    if topology not in ("radial", "meshed"):
        raise ValueError(f"unknown topology {topology!r}")
    rng = np.random.default_rng(seed)

    edges = []
    order = rng.permutation(n_buses)
    for pos in range(1, n_buses):
        parent = order[rng.integers(pos)]
        edges.append(tuple(sorted((int(order[pos]), int(parent)))))
    if topology == "meshed":
        existing = set(edges)
        candidates = [
            (i, j) for i in range(n_buses) for j in range(i + 1, n_buses) if (i, j) not in existing
        ]
        want = min(math.ceil(0.2 * n_buses), len(candidates))
        picks = rng.choice(len(candidates), size=want, replace=False) if want else []
        edges.extend(candidates[int(p)] for p in sorted(picks))
    edges.sort()

    g = rng.uniform(0.5, 5.0, len(edges))
    b = rng.uniform(1.0, 10.0, len(edges))
    delta_star = rng.uniform(-angle_spread, angle_spread, n_buses)

    lines = tuple(
        Line(l + 1, i + 1, j + 1, float(gl), float(bl), alpha)
        for l, ((i, j), gl, bl) in enumerate(zip(edges, g, b))
    )
    buses = tuple(Bus(k + 1, tau, damping, float(delta_star[k]), 0.0) for k in range(n_buses))
    net = Network(buses, lines)
    return net.with_setpoints(delta_star, injections(net, delta_star))
