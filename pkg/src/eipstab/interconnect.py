"""Bus/line subsystem blocks and the interconnection ``u = (M1 + M2) y``.

Stacked ordering is fixed everywhere: bus 1..n, then the output (or input)
pair of each line in internal line order.  For line ``l = (i, j)`` the pair
is ``(i -> j, j -> i)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .netmodel import Line, Network

# above this stacked size, Phi/Psi are kept sparse and M1/M2 are not built
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class InterconnectionMatrices:
    phi_nl: np.ndarray | sp.csr_array
    phi_ln: np.ndarray | sp.csr_array
    psi: np.ndarray | sp.csr_array
    m1: np.ndarray | None
    m2: np.ndarray | None
    algorithm1_compat: bool = False

    @property
    def n(self) -> int:
        return self.psi.shape[0]

    @property
    def size(self) -> int:
        return self.psi.shape[0] + self.psi.shape[1]

    @property
    def dense(self) -> bool:
        return self.m1 is not None

    @property
    def m(self) -> np.ndarray:
        if self.m1 is None:
            raise ValueError(
                f"stacked size {self.size} exceeds {DENSE_LIMIT}; M is not materialized"
            )
        return self.m1 + self.m2


@dataclass(frozen=True)
class SubsystemIO:
    u: np.ndarray
    y: np.ndarray


def line_output(line: Line, u1, u2):
    """Modified line flows ``(y_1, y_2)`` for the two angle-difference inputs."""
    def y(u):
        return 0.5 * ((line.g - line.g * np.cos(u)) / line.alpha + line.b * np.sin(u))

    return y(u1), y(u2)


def recover_line_flows(line: Line, y1, y2):
    total = line.alpha * (np.add(y1, y2))
    diff = np.subtract(y1, y2)
    return total + diff, total - diff


def line_outputs(net: Network, delta) -> np.ndarray:
    """All line outputs stacked as a length-2m vector (batched on leading dims)."""
    delta = np.asarray(delta, dtype=float)
    ends = net.endpoints
    diff = delta[..., ends[:, 0]] - delta[..., ends[:, 1]]
    g, b, a = net.g, net.b, net.alpha
    loss = (g - g * np.cos(diff)) / a
    react = b * np.sin(diff)
    y = np.empty(delta.shape[:-1] + (2 * net.m,))
    y[..., 0::2] = 0.5 * (loss + react)
    y[..., 1::2] = 0.5 * (loss - react)
    return y


def stacked_io(net: Network, delta, mats: InterconnectionMatrices | None = None) -> SubsystemIO:
    """Stacked outputs ``y = (delta, y_L)`` and inputs ``u = (M1 + M2) y``."""
    mats = mats if mats is not None else build_matrices(net)
    y = np.concatenate([np.asarray(delta, dtype=float), line_outputs(net, delta)])
    return SubsystemIO(apply_interconnection(mats, y), y)


def _triplets(net: Network, algorithm1_compat: bool):
    n, m = net.n, net.m
    ends = net.endpoints
    cols = 2 * np.arange(m)
    a = net.alpha
    i, j = ends[:, 0], ends[:, 1]

    # Phi_NL: head row i gets [-1, 1], tail row j gets [1, -1]
    nl_rows = np.concatenate([i, i, j, j])
    nl_cols = np.concatenate([cols, cols + 1, cols, cols + 1])
    nl_vals = np.concatenate([-np.ones(m), np.ones(m), np.ones(m), -np.ones(m)])

    if algorithm1_compat:
        psi_rows = np.concatenate([i, j])
        psi_cols = np.concatenate([cols, cols + 1])
        psi_vals = np.concatenate([-a, -a])
    else:
        psi_rows = nl_rows
        psi_cols = nl_cols
        psi_vals = -np.concatenate([a, a, a, a])
    return (n, 2 * m), (nl_rows, nl_cols, nl_vals), (psi_rows, psi_cols, psi_vals)


def build_matrices(
    net: Network, algorithm1_compat: bool = False, dense: bool | None = None
) -> InterconnectionMatrices:
    """Assemble Phi_NL, Phi_LN = -Phi_NL^T, Psi, M1 and M2 for a network.

    ``algorithm1_compat`` places a single ``-alpha`` per bus row (head in the
    first column of the pair, tail in the second) instead of the full
    ``-alpha [1, 1]`` block for both endpoints.  It is kept only for
    comparison; it does not reproduce the network dynamics.
    """
    shape, nl, ps = _triplets(net, algorithm1_compat)
    n, two_m = shape
    if dense is None:
        dense = n + two_m <= DENSE_LIMIT

    phi_nl = sp.coo_array((nl[2], (nl[0], nl[1])), shape=shape).tocsr()
    psi = sp.coo_array((ps[2], (ps[0], ps[1])), shape=shape).tocsr()
    phi_ln = (-phi_nl.T).tocsr()
    if not dense:
        return InterconnectionMatrices(phi_nl, phi_ln, psi, None, None, algorithm1_compat)

    phi_nl = phi_nl.toarray()
    phi_ln = phi_ln.toarray()
    psi = psi.toarray()
    size = n + two_m
    m1 = np.zeros((size, size))
    m1[:n, n:] = phi_nl
    m1[n:, :n] = phi_ln
    m2 = np.zeros((size, size))
    m2[:n, n:] = psi
    return InterconnectionMatrices(phi_nl, phi_ln, psi, m1, m2, algorithm1_compat)


def apply_interconnection(mats: InterconnectionMatrices, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != mats.size:
        raise ValueError(f"output vector has length {y.shape[-1]}, expected {mats.size}")
    if mats.dense:
        return y @ (mats.m1 + mats.m2).T
    n = mats.n
    y_n, y_l = y[..., :n], y[..., n:]
    u_n = (mats.phi_nl @ y_l.T).T + (mats.psi @ y_l.T).T
    u_l = (mats.phi_ln @ y_n.T).T
    return np.concatenate([u_n, u_l], axis=-1)

