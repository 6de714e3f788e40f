"""Network data model, JSON ingestion and the lossy power-flow equations.

Angles are radians, powers are per-unit, and voltages are fixed at 1 p.u.
Buses are indexed 0..n-1 internally (file order); line ``l`` occupies the
stacked position ``n + l``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_SETPOINT_TOL = 1e-8

_BUS_KEYS = {"id", "tau_a", "d_a", "delta_star", "p_star"}
_LINE_KEYS = {"id", "from", "to", "g", "b", "alpha"}


class NetworkError(ValueError):
    """Raised when a network file or object violates the model invariants."""


def _finite(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise NetworkError(f"{what}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise NetworkError(f"{what}: non-finite value {value!r}")
    return value


@dataclass(frozen=True)
class Bus:
    id: int
    tau_a: float
    d_a: float
    delta_star: float = 0.0
    p_star: float = 0.0

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id <= 0:
            raise NetworkError(f"bus {self.id!r}: id must be a positive integer")
        if not self.tau_a > 0:
            raise NetworkError(f"bus {self.id}: tau_a must be > 0 (got {self.tau_a})")
        if not self.d_a > 0:
            raise NetworkError(f"bus {self.id}: d_a must be > 0 (got {self.d_a})")


@dataclass(frozen=True)
class Line:
    id: int
    from_bus: int
    to_bus: int
    g: float
    b: float
    alpha: float = 1.0

    def __post_init__(self):
        if not isinstance(self.id, int) or self.id <= 0:
            raise NetworkError(f"line {self.id!r}: id must be a positive integer")
        if self.from_bus == self.to_bus:
            raise NetworkError(f"line {self.id}: self-loop at bus {self.from_bus}")
        if self.from_bus > self.to_bus:
            raise NetworkError(
                f"line {self.id}: from_bus must be < to_bus (use Line.normalized)"
            )
        if not self.g >= 0:
            raise NetworkError(f"line {self.id}: g must be >= 0 (got {self.g})")
        if not self.b > 0:
            raise NetworkError(f"line {self.id}: b must be > 0 (got {self.b})")
        if not self.alpha > 0:
            raise NetworkError(f"line {self.id}: alpha must be > 0 (got {self.alpha})")

    @classmethod
    def normalized(cls, id, a, b_bus, g, b, alpha=1.0) -> "Line":
        """Build a line, swapping endpoints so that ``from_bus < to_bus``."""
        if a > b_bus:
            a, b_bus = b_bus, a
        return cls(id, a, b_bus, g, b, alpha)


@dataclass(frozen=True)
class Network:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    bus_index: dict = field(init=False, repr=False, compare=False)
    line_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.buses:
            raise NetworkError("network has no buses")
        bus_index = {}
        for k, bus in enumerate(self.buses):
            if bus.id in bus_index:
                raise NetworkError(f"duplicate bus id {bus.id}")
            bus_index[bus.id] = k
        line_index = {}
        pairs = set()
        for l, line in enumerate(self.lines):
            if line.id in line_index:
                raise NetworkError(f"duplicate line id {line.id}")
            line_index[line.id] = l
            for end in (line.from_bus, line.to_bus):
                if end not in bus_index:
                    raise NetworkError(f"line {line.id}: unknown bus {end}")
            pair = (line.from_bus, line.to_bus)
            if pair in pairs:
                raise NetworkError(f"line {line.id}: duplicate line between buses {pair}")
            pairs.add(pair)
        object.__setattr__(self, "bus_index", bus_index)
        object.__setattr__(self, "line_index", line_index)
        if not _is_connected(len(self.buses), self.endpoints):
            raise NetworkError("network graph is disconnected")

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def m(self) -> int:
        return len(self.lines)

    @property
    def endpoints(self) -> np.ndarray:
        """(m, 2) array of internal bus indices ``(i, j)`` per line, i the head."""
        if not self.lines:
            return np.zeros((0, 2), dtype=int)
        return np.array(
            [(self.bus_index[ln.from_bus], self.bus_index[ln.to_bus]) for ln in self.lines],
            dtype=int,
        )

    @property
    def tau(self) -> np.ndarray:
        return np.array([b.tau_a for b in self.buses])

    @property
    def damping(self) -> np.ndarray:
        return np.array([b.d_a for b in self.buses])

    @property
    def delta_star(self) -> np.ndarray:
        return np.array([b.delta_star for b in self.buses])

    @property
    def p_star(self) -> np.ndarray:
        return np.array([b.p_star for b in self.buses])

    @property
    def g(self) -> np.ndarray:
        return np.array([ln.g for ln in self.lines])

    @property
    def b(self) -> np.ndarray:
        return np.array([ln.b for ln in self.lines])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([ln.alpha for ln in self.lines])

    def line_by_id(self, line_id: int) -> Line:
        try:
            return self.lines[self.line_index[line_id]]
        except KeyError:
            raise NetworkError(f"no line with id {line_id}") from None

    def with_damping(self, d: Sequence[float]) -> "Network":
        d = list(d)
        if len(d) != self.n:
            raise NetworkError(f"damping vector has {len(d)} entries, expected {self.n}")
        return replace(self, buses=tuple(replace(b, d_a=float(x)) for b, x in zip(self.buses, d)))

    def with_alphas(self, alphas: Sequence[float]) -> "Network":
        alphas = list(alphas)
        if len(alphas) != self.m:
            raise NetworkError(f"alpha vector has {len(alphas)} entries, expected {self.m}")
        return replace(
            self, lines=tuple(replace(ln, alpha=float(a)) for ln, a in zip(self.lines, alphas))
        )

    def with_setpoints(self, delta_star, p_star) -> "Network":
        return replace(
            self,
            buses=tuple(
                replace(b, delta_star=float(ds), p_star=float(ps))
                for b, ds, ps in zip(self.buses, delta_star, p_star)
            ),
        )


@dataclass(frozen=True)
class AngleState:
    delta: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim != 1:
            raise ValueError("angle state must be a 1-D vector")
        if not np.all(np.isfinite(delta)):
            raise ValueError("angle state has non-finite entries")
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)


def _is_connected(n: int, edges: np.ndarray) -> bool:
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for nb in adj[k]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == n


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def network_from_dict(data: dict) -> Network:
    if not isinstance(data, dict):
        raise NetworkError("network document must be a JSON object")
    extra = set(data) - {"buses", "lines"}
    if extra:
        raise NetworkError(f"unknown top-level keys: {sorted(extra)}")
    if "buses" not in data or "lines" not in data:
        raise NetworkError("network document needs 'buses' and 'lines'")

    buses = []
    for pos, raw in enumerate(data["buses"]):
        if not isinstance(raw, dict):
            raise NetworkError(f"buses[{pos}] is not an object")
        unknown = set(raw) - _BUS_KEYS
        missing = _BUS_KEYS - set(raw)
        if unknown:
            raise NetworkError(f"buses[{pos}]: unknown keys {sorted(unknown)}")
        if missing:
            raise NetworkError(f"buses[{pos}]: missing keys {sorted(missing)}")
        bus_id = raw["id"]
        if isinstance(bus_id, bool) or not isinstance(bus_id, int):
            raise NetworkError(f"buses[{pos}]: id must be an integer")
        where = f"bus {bus_id}"
        buses.append(
            Bus(
                id=bus_id,
                tau_a=_finite(raw["tau_a"], f"{where}.tau_a"),
                d_a=_finite(raw["d_a"], f"{where}.d_a"),
                delta_star=_finite(raw["delta_star"], f"{where}.delta_star"),
                p_star=_finite(raw["p_star"], f"{where}.p_star"),
            )
        )

    lines = []
    for pos, raw in enumerate(data["lines"]):
        if not isinstance(raw, dict):
            raise NetworkError(f"lines[{pos}] is not an object")
        unknown = set(raw) - _LINE_KEYS
        missing = _LINE_KEYS - set(raw)
        if unknown:
            raise NetworkError(f"lines[{pos}]: unknown keys {sorted(unknown)}")
        if missing:
            raise NetworkError(f"lines[{pos}]: missing keys {sorted(missing)}")
        for key in ("id", "from", "to"):
            if isinstance(raw[key], bool) or not isinstance(raw[key], int):
                raise NetworkError(f"lines[{pos}]: {key} must be an integer")
        where = f"line {raw['id']}"
        lines.append(
            Line.normalized(
                raw["id"],
                raw["from"],
                raw["to"],
                _finite(raw["g"], f"{where}.g"),
                _finite(raw["b"], f"{where}.b"),
                _finite(raw["alpha"], f"{where}.alpha"),
            )
        )
    return Network(tuple(buses), tuple(lines))


def network_to_dict(net: Network) -> dict:
    return {
        "buses": [
            {
                "id": b.id,
                "tau_a": b.tau_a,
                "d_a": b.d_a,
                "delta_star": b.delta_star,
                "p_star": b.p_star,
            }
            for b in net.buses
        ],
        "lines": [
            {
                "id": ln.id,
                "from": ln.from_bus,
                "to": ln.to_bus,
                "g": ln.g,
                "b": ln.b,
                "alpha": ln.alpha,
            }
            for ln in net.lines
        ],
    }


def load_network(path) -> Network:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{path}: invalid JSON ({exc})") from exc
    return network_from_dict(data)


def save_network(net: Network, path) -> None:
    from .output import dumps_json

    Path(path).write_text(dumps_json(network_to_dict(net)) + "\n")


# ---------------------------------------------------------------------------
# Power flow
# ---------------------------------------------------------------------------

def line_power(line: Line, delta_i, delta_j):
    """Real power leaving the head ``i`` of a lossy line towards ``j``."""
    diff = np.subtract(delta_i, delta_j)
    return line.g - line.g * np.cos(diff) + line.b * np.sin(diff)


def line_flows(net: Network, delta) -> tuple[np.ndarray, np.ndarray]:
    """Per-line flows ``(p_ij, p_ji)`` for an angle vector (or a batch of them)."""
    delta = np.asarray(delta, dtype=float)
    ends = net.endpoints
    diff = delta[..., ends[:, 0]] - delta[..., ends[:, 1]]
    g, b = net.g, net.b
    loss = g - g * np.cos(diff)
    react = b * np.sin(diff)
    return loss + react, loss - react


def injections(net: Network, delta) -> np.ndarray:
    """Power injected by every bus into the network, ``sum_j p_kj``.

    The outgoing flow of the tail bus is ``p_ji``, not ``-p_ij``; the two
    differ by the line loss.  Accepts a leading batch dimension.
    """
    delta = np.asarray(delta, dtype=float)
    p_ij, p_ji = line_flows(net, delta)
    ends = net.endpoints
    out = np.zeros(delta.shape[:-1] + (net.n,))
    # np.add.at on the last axis only; batch dims broadcast via moveaxis
    out_t = np.moveaxis(out, -1, 0)
    np.add.at(out_t, ends[:, 0], np.moveaxis(p_ij, -1, 0))
    np.add.at(out_t, ends[:, 1], np.moveaxis(p_ji, -1, 0))
    return out


def bus_injection(net: Network, state, k: int) -> float:
    delta = state.delta if isinstance(state, AngleState) else np.asarray(state, float)
    if not 0 <= k < net.n:
        raise IndexError(f"bus index {k} out of range for n={net.n}")
    return float(injections(net, delta)[k])


def total_loss(net: Network, delta) -> float:
    ends = net.endpoints
    delta = np.asarray(delta, dtype=float)
    diff = delta[ends[:, 0]] - delta[ends[:, 1]]
    return float(np.sum(2 * net.g * (1 - np.cos(diff))))


@dataclass(frozen=True)
class SetpointReport:
    residuals: np.ndarray
    flagged: tuple[int, ...]
    tol: float

    @property
    def consistent(self) -> bool:
        return not self.flagged


def validate_setpoints(net: Network, tol: float = DEFAULT_SETPOINT_TOL) -> SetpointReport:
    """Residuals ``p*_k - p_k(delta*)``; buses with ``|r_k| > tol`` are flagged."""
    residuals = net.p_star - injections(net, net.delta_star)
    flagged = tuple(int(k) for k in np.flatnonzero(np.abs(residuals) > tol))
    return SetpointReport(residuals, flagged, tol)
