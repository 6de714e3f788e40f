"""Minimum-effort damping under the certificate ``diag(d) >= Q``.

The solver is a primal log-barrier path-following method.  For the 2-norm
objective an epigraph variable ``t >= ||d||`` is added with the cone
barrier ``-log(t^2 - ||d||^2)``; the 1-norm variant minimizes ``sum(d)``
directly (``d >= diag(Q) >= 0`` on the feasible set).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certify import certify_theorem1, psd_tol, q_matrix
from .eip import line_equilibria, gamma, tune_alpha
from .linalg import min_eigen_sym, max_eigen_sym
from .netmodel import Network

log = logging.getLogger(__name__)

D_FLOOR = 1e-9
ALPHA_FLOOR = 1e-9
DEFAULT_GAP_TOL = 1e-8
MU_FACTOR = 0.2
MAX_OUTER = 200
MAX_NEWTON = 100


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DampingSolution:
    d: np.ndarray
    objective: float
    margin: float
    iterations: int
    converged: bool = True
    gap: float = 0.0
    norm: str = "l2"


@dataclass(frozen=True)
class ParetoPoint:
    alpha: float
    gamma: float
    region_width: float
    min_damping_norm: float
    feasible: bool
    d: np.ndarray = field(repr=False, default=None)


def _chol_inv(s: np.ndarray):
    try:
        c = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return None
    ci = np.linalg.solve(c, np.eye(len(s)))
    return ci.T @ ci


class _Barrier:
    """Centering objective ``s * c^T x + F(x)`` for ``x = (d[, t])``."""

    def __init__(self, q: np.ndarray, norm: str):
        self.q = q
        self.n = len(q)
        self.cone = norm == "l2"
        self.nu = self.n + (2 if self.cone else 0)
        dim = self.n + (1 if self.cone else 0)
        self.c = np.zeros(dim)
        if self.cone:
            self.c[-1] = 1.0
        else:
            self.c[:] = 1.0

    def split(self, x):
        return (x[:-1], x[-1]) if self.cone else (x, None)

    def value(self, x, s):
        d, t = self.split(x)
        sm = np.diag(d) - self.q
        try:
            c = np.linalg.cholesky(sm)
        except np.linalg.LinAlgError:
            return math.inf
        val = s * float(self.c @ x) - 2.0 * float(np.sum(np.log(np.diag(c))))
        if self.cone:
            phi = t * t - float(d @ d)
            if not (t > 0 and phi > 0):
                return math.inf
            val -= math.log(phi)
        return val

    def derivatives(self, x, s):
        d, t = self.split(x)
        sinv = _chol_inv(np.diag(d) - self.q)
        if sinv is None:
            raise SolverError("iterate left the feasible region")
        n = self.n
        grad = s * self.c.copy()
        hess = np.zeros((len(x), len(x)))
        grad[:n] -= np.diag(sinv)
        hess[:n, :n] = sinv * sinv
        if self.cone:
            phi = t * t - float(d @ d)
            grad[:n] += 2.0 * d / phi
            grad[n] += -2.0 * t / phi
            h = np.concatenate([-2.0 * d, [2.0 * t]])
            hess += np.outer(h, h) / phi**2
            hess[:n, :n] += 2.0 * np.eye(n) / phi
            hess[n, n] -= 2.0 / phi
        return grad, hess

    def objective(self, x):
        d, t = self.split(x)
        return float(np.linalg.norm(d)) if self.cone else float(np.sum(d))


def _center(bar: _Barrier, x, s, tol=1e-12):
    steps = 0
    for _ in range(MAX_NEWTON):
        grad, hess = bar.derivatives(x, s)
        try:
            dx = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            dx = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        dec = float(-grad @ dx)
        steps += 1
        if dec / 2.0 <= tol:
            break
        f0 = bar.value(x, s)
        step = 1.0
        while True:
            f1 = bar.value(x + step * dx, s)
            if f1 <= f0 - 0.25 * step * dec:
                break
            step *= 0.5
            if step < 1e-14:
                return x, steps
        x = x + step * dx
    return x, steps


def solve_min_damping(
    q, gap_tol: float = DEFAULT_GAP_TOL, norm: str = "l2"
) -> DampingSolution:
    """Smallest-norm damping vector with ``diag(d) - Q`` positive semidefinite."""
    q = np.asarray(q, dtype=float)
    q = 0.5 * (q + q.T)
    if norm not in ("l2", "l1"):
        raise ValueError(f"unknown norm {norm!r}")
    if not 0 < gap_tol <= 1e-2:
        raise ValueError("gap_tol must lie in (0, 1e-2]")
    tol = psd_tol(q)
    n = len(q)
    if n and min_eigen_sym(q)[0] < -tol:
        raise SolverError("bound matrix is not positive semidefinite")
    # outward rounding keeps the certificate's strict test satisfied
    bump = 2.0 * tol

    def finish(d, iters, converged, gap):
        d = np.maximum(d + bump, D_FLOOR)
        margin, _ = min_eigen_sym(np.diag(d) - q)
        obj = float(np.linalg.norm(d)) if norm == "l2" else float(np.sum(d))
        return DampingSolution(d, obj, margin, iters, converged, gap, norm)

    if not np.any(q):
        return finish(np.zeros(n), 0, True, 0.0)

    bar = _Barrier(q, norm)
    d0 = np.full(n, max_eigen_sym(q)[0] + 1.0)
    x = np.append(d0, 2.0 * np.linalg.norm(d0)) if bar.cone else d0
    s = bar.nu / max(bar.objective(x), 1.0)
    iters = 0
    best = x
    for _ in range(MAX_OUTER):
        try:
            x, k = _center(bar, x, s)
        except SolverError:
            log.warning("barrier iterate became infeasible; returning last centered point")
            return finish(bar.split(best)[0], iters, False, bar.nu / s)
        iters += k
        best = x
        gap = bar.nu / s
        lower = bar.objective(x) - gap
        if gap <= gap_tol * max(lower, np.finfo(float).tiny):
            return finish(bar.split(x)[0], iters, True, gap / max(lower, 1e-300))
        s /= MU_FACTOR
    log.warning("barrier method hit the outer-iteration limit")
    return finish(bar.split(best)[0], iters, False, bar.nu / s)


def solve_for_network(net: Network, gap_tol: float = DEFAULT_GAP_TOL, norm: str = "l2"):
    return solve_min_damping(q_matrix(net), gap_tol, norm)


def geometric_grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if not lo > 0 or not hi >= lo:
        raise ValueError("need 0 < alpha_min <= alpha_max")
    if steps < 2:
        raise ValueError("need at least two sweep steps")
    return np.geomspace(lo, hi, steps)


def _pareto_point(net: Network, pos: int, alpha: float, gap_tol: float, norm: str) -> ParetoPoint:
    alphas = net.alpha
    alphas[pos] = alpha
    swept = net.with_alphas(alphas)
    line = swept.lines[pos]
    gam = gamma(line)
    width = 2 * math.pi - 4 * gam
    try:
        sol = solve_min_damping(q_matrix(swept), gap_tol, norm)
        ok = sol.converged and certify_theorem1(swept.with_damping(sol.d)).feasible
        return ParetoPoint(alpha, gam, width, sol.objective, ok, sol.d)
    except (SolverError, ValueError) as exc:
        log.warning("pareto point alpha=%g failed: %s", alpha, exc)
        return ParetoPoint(alpha, gam, width, math.nan, False, None)


def pareto_sweep(
    net: Network,
    line_id: int,
    alpha_min: float = 0.1,
    alpha_max: float = 2.0,
    steps: int = 20,
    gap_tol: float = DEFAULT_GAP_TOL,
    norm: str = "l2",
    threads: int = 1,
) -> list[ParetoPoint]:
    """Trade-off between the swept line's region width and the least damping norm."""
    pos = net.line_index.get(line_id)
    if pos is None:
        raise ValueError(f"no line with id {line_id}")
    grid = geometric_grid(alpha_min, alpha_max, steps)

    def run(a):
        return _pareto_point(net, pos, float(a), gap_tol, norm)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, grid))
    return [run(a) for a in grid]


def margin_alphas(net: Network, beta_per_line) -> np.ndarray:
    beta = np.broadcast_to(np.asarray(beta_per_line, dtype=float), (net.m,))
    alphas = []
    for line, dstar, b in zip(net.lines, line_equilibria(net), beta):
        alphas.append(max(tune_alpha(line.g, line.b, float(dstar), float(b)), ALPHA_FLOOR))
    return np.array(alphas)


def damping_for_margin(
    net: Network, beta_per_line, gap_tol: float = DEFAULT_GAP_TOL, norm: str = "l2"
) -> tuple[np.ndarray, DampingSolution]:
    """Tune every alpha for its angle margin, then solve for the least damping."""
    alphas = margin_alphas(net, beta_per_line)
    tuned = net.with_alphas(alphas)
    return alphas, solve_min_damping(q_matrix(tuned), gap_tol, norm)
