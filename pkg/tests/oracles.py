"""Brute-force references that share no code with the package solvers."""
import numpy as np


def _last_coordinate(q, head):
    """Smallest d_n making diag(head, d_n) - Q PSD, given the leading entries (inf if none)."""
    k = len(head)
    a = np.diag(head) - q[:k, :k]
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return np.inf
    col = q[:k, k]
    return q[k, k] + col @ np.linalg.solve(a, col)


def min_damping_grid(q, points=41, rounds=25):
    """Least ||d||_2 with diag(d) >= Q for n = 2 or 3, by zooming grid search.

    The last coordinate is eliminated exactly through the Schur complement,
    leaving a convex function of the first n-1 coordinates.
    """
    q = np.asarray(q, dtype=float)
    n = len(q)
    if n not in (2, 3):
        raise ValueError("grid oracle handles n = 2 or 3")
    top = np.sqrt(n) * np.max(np.linalg.eigvalsh(q)) + 1.0
    lo = np.diag(q)[: n - 1].copy()
    hi = np.full(n - 1, top)
    best = (np.inf, None)
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(n - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        flat = np.stack([m.ravel() for m in mesh], axis=1)
        for head in flat:
            last = _last_coordinate(q, head)
            if np.isfinite(last):
                val = np.sqrt(head @ head + last * last)
                if val < best[0]:
                    best = (val, np.append(head, last))
        step = (hi - lo) / (points - 1)
        centre = best[1][: n - 1]
        lo = np.maximum(centre - 2 * step, np.diag(q)[: n - 1])
        hi = centre + 2 * step
    return best
