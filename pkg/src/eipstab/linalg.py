"""Symmetric eigen-decomposition by cyclic Jacobi rotations.

Rotations are applied in round-robin order: each round pairs every index
with a distinct partner, so the ``n // 2`` rotations of a round touch
disjoint rows/columns and can be applied together with fancy indexing.
"""
from __future__ import annotations

import numpy as np

OFF_TOL = 1e-12
SYM_TOL = 1e-10
MAX_SWEEPS = 60


class NotSymmetricError(ValueError):
    pass


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one sweep; every unordered pair appears exactly once."""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for k in range(size // 2):
            a, b = players[k], players[size - 1 - k]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a, tol: float = OFF_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = float(np.linalg.norm(a))
    if np.max(np.abs(a - a.T), initial=0.0) > SYM_TOL * max(scale, 1.0):
        raise NotSymmetricError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    target = tol * scale
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        if _off(a) <= target:
            break
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            app, aqq = a[p, p], a[q, q]
            # stable tangent of the rotation angle (Golub & Van Loan 8.5.2)
            theta = (aqq - app) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            t = np.where(
                big,
                0.5 / np.where(big, theta, 1.0),
                np.sign(theta) / (np.abs(theta) + np.sqrt(np.where(big, 0.0, theta) ** 2 + 1.0)),
            )
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        if _off(a) > target:
            raise RuntimeError(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def min_eigen_sym(a) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector."""
    w, v = jacobi_eigh(a)
    return float(w[0]), v[:, 0]


def max_eigen_sym(a) -> tuple[float, np.ndarray]:
    w, v = jacobi_eigh(a)
    return float(w[-1]), v[:, -1]
