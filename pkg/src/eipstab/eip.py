"""Equilibrium-independent passivity of the bus and line subsystems.

A line is a memoryless map ``y(u) = (g - g cos u)/(2 alpha) + (b/2) sin u``,
equivalently ``g/(2 alpha) + R sin(u - gamma)/(2 alpha)`` with
``R = hypot(g, b alpha)`` and ``gamma = arctan(g / (b alpha))``.  Its strict
EIP coefficient is the reciprocal of the largest slope, ``2 alpha / R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .netmodel import Line, Network

# closed-interval checks against open (g = 0) regions are shrunk by this much
OPEN_SHRINK = 1e-9
DEFAULT_GRID = 200


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    open: bool = False

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def closed(self) -> "Interval":
        """Closed inner version, shrunk by ``OPEN_SHRINK`` when the interval is open."""
        if not self.open:
            return self
        return Interval(self.lo + OPEN_SHRINK, self.hi - OPEN_SHRINK)

    def contains(self, x, strict: bool | None = None) -> bool:
        strict = self.open if strict is None else strict
        x = np.asarray(x)
        if strict:
            return bool(np.all((self.lo < x) & (x < self.hi)))
        return bool(np.all((self.lo <= x) & (x <= self.hi)))

    def contains_interval(self, other: "Interval") -> bool:
        inner = self.closed()
        return inner.lo <= other.lo and other.hi <= inner.hi


@dataclass(frozen=True)
class EipProfile:
    eps_n: np.ndarray
    eps_l: np.ndarray
    regions: np.ndarray

    @property
    def eps(self) -> np.ndarray:
        return np.concatenate([self.eps_n, self.eps_l])


@dataclass(frozen=True)
class RegionSpec:
    line_id: int
    delta_star_ij: float
    beta: float
    interval: Interval


def gamma(line: Line) -> float:
    """Horizontal shift of the line's sine, ``arctan(g / (b alpha))`` in [0, pi/2)."""
    return math.atan2(line.g, line.b * line.alpha)


def region_bound(line: Line) -> float:
    """``arctan(b alpha / g)``, taken as pi/2 for a lossless line."""
    return math.atan2(line.b * line.alpha, line.g)


def line_eps(line: Line) -> float:
    return 2.0 * line.alpha / math.hypot(line.g, line.b * line.alpha)


def bus_eps(net: Network) -> np.ndarray:
    return net.damping


def eip_profile(net: Network) -> EipProfile:
    eps_line = 2.0 * net.alpha / np.hypot(net.g, net.b * net.alpha)
    regions = np.arctan2(net.b * net.alpha, net.g)
    return EipProfile(bus_eps(net), np.repeat(eps_line, 2), regions)


def eip_region(line: Line) -> Interval:
    """Equilibrium angle differences for which the line is strictly EIP."""
    r = region_bound(line)
    return Interval(-r, r, open=line.g == 0)


def admissible_inputs(line: Line) -> Interval:
    """Input range ``[-pi/2 + gamma, pi/2 + gamma]`` where the line output is nondecreasing."""
    gam = gamma(line)
    return Interval(-math.pi / 2 + gam, math.pi / 2 + gam)


def stability_region(line: Line, delta_star_ij: float) -> Interval:
    """Angle differences certified around one equilibrium of the line.

    Raises RegionError when the equilibrium lies outside the EIP region.
    """
    if not eip_region(line).closed().contains(delta_star_ij, strict=False):
        raise RegionError(
            f"line {line.id}: equilibrium difference {delta_star_ij:.6g} rad lies outside "
            f"the EIP region +-{region_bound(line):.6g}"
        )
    gam = gamma(line)
    return Interval(-math.pi + 2 * gam - delta_star_ij, math.pi - 2 * gam - delta_star_ij)


def tune_alpha(g: float, b: float, delta_star_ij: float, beta: float) -> float:
    """Smallest alpha whose stability region holds ``[delta* - beta, delta* + beta]``."""
    limit = math.pi - 2 * abs(delta_star_ij)
    if not 0 < beta < limit:
        raise RegionError(f"margin beta={beta:.6g} must lie in (0, {limit:.6g})")
    return g * math.tan(abs(delta_star_ij) + beta / 2) / b


def region_spec(line: Line, delta_star_ij: float, beta: float) -> RegionSpec:
    return RegionSpec(line.id, delta_star_ij, beta, stability_region(line, delta_star_ij))


def line_map(line: Line, u):
    """Shifted-sine form of the line output."""
    amp = math.hypot(line.g, line.b * line.alpha) / (2 * line.alpha)
    return line.g / (2 * line.alpha) + amp * np.sin(np.asarray(u) - gamma(line))


def memoryless_residual(line: Line, u, u_star):
    eps = line_eps(line)
    dy = line_map(line, u) - line_map(line, u_star)
    return (np.asarray(u) - np.asarray(u_star)) * dy - eps * dy**2


def check_memoryless_eip(line: Line, u_grid=None, u_star_grid=None) -> float:
    """Worst (smallest) passivity residual over all pairs of the two grids."""
    if u_grid is None:
        rng = admissible_inputs(line)
        u_grid = np.linspace(rng.lo, rng.hi, DEFAULT_GRID)
    if u_star_grid is None:
        u_star_grid = u_grid
    u, us = np.meshgrid(np.asarray(u_grid, float), np.asarray(u_star_grid, float), indexing="ij")
    return float(np.min(memoryless_residual(line, u, us)))


def slope(line: Line, u, h: float = 1e-6):
    return (line_map(line, np.asarray(u) + h) - line_map(line, np.asarray(u) - h)) / (2 * h)


def slope_equivalence_check(line: Line, u_grid=None, tol: float = 1e-8) -> bool:
    """Numerical check that the slope stays in ``[0, 1/eps]`` and saturates at the crest."""
    if u_grid is None:
        rng = admissible_inputs(line)
        u_grid = np.linspace(rng.lo, rng.hi, DEFAULT_GRID)
    s = slope(line, u_grid)
    top = 1.0 / line_eps(line)
    in_band = bool(np.all((s >= -tol) & (s <= top + tol)))
    crest = float(slope(line, gamma(line)))
    return in_band and abs(crest - top) <= 1e-6 * max(1.0, top)


def line_equilibria(net: Network) -> np.ndarray:
    ends = net.endpoints
    ds = net.delta_star
    return ds[ends[:, 0]] - ds[ends[:, 1]]


def region_table(net: Network, beta: float | None = None) -> list[dict]:
    """Per-line summary: gamma, EIP interval, stability interval at delta*, tuned alpha."""
    rows = []
    for line, dstar in zip(net.lines, line_equilibria(net)):
        eipr = eip_region(line)
        row = {
            "line": line.id,
            "from": line.from_bus,
            "to": line.to_bus,
            "gamma": gamma(line),
            "eip_lo": eipr.lo,
            "eip_hi": eipr.hi,
            "delta_star_ij": float(dstar),
        }
        try:
            st = stability_region(line, float(dstar))
            row.update(stab_lo=st.lo, stab_hi=st.hi, width=st.width)
        except RegionError:
            row.update(stab_lo=float("nan"), stab_hi=float("nan"), width=float("nan"))
        if beta is not None:
            try:
                row["alpha_min"] = tune_alpha(line.g, line.b, float(dstar), beta)
            except RegionError:
                row["alpha_min"] = float("nan")
        rows.append(row)
    return rows
