"""Stability certificates built from the subsystem passivity coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .eip import EipProfile, eip_profile
from .interconnect import DENSE_LIMIT, InterconnectionMatrices, build_matrices
from .linalg import jacobi_eigh, min_eigen_sym
from .netmodel import Network

SIGMA_SAFETY = 0.999


@dataclass(frozen=True)
class CertificateReport:
    feasible: bool
    margin: float
    sigma: float | None
    q_matrix: np.ndarray
    damping: np.ndarray
    psd_tol: float

    @property
    def per_bus_slack(self) -> np.ndarray:
        return self.damping - np.diag(self.q_matrix)


@dataclass(frozen=True)
class LyapunovWeights:
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or not np.all(c > 0) or not np.all(np.isfinite(c)):
            raise ValueError("Lyapunov weights must be a positive finite vector")
        object.__setattr__(self, "c", c)


def psd_tol(q: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.linalg.norm(q)))


def q_matrix(
    net: Network,
    mats: InterconnectionMatrices | None = None,
    eps: EipProfile | None = None,
) -> np.ndarray:
    """``Psi diag(eps_L)^-1 Psi^T / 4``, the damping lower bound."""
    mats = mats if mats is not None else build_matrices(net)
    eps = eps if eps is not None else eip_profile(net)
    if np.any(eps.eps_l <= 0):
        raise ValueError("line passivity coefficients must be positive")
    psi = mats.psi
    inv = 1.0 / eps.eps_l
    if sp.issparse(psi):
        q = (psi @ sp.diags_array(inv) @ psi.T).toarray() / 4.0
    else:
        q = (psi * inv) @ psi.T / 4.0
    return 0.5 * (q + q.T)


def certify_theorem1(net: Network, q: np.ndarray | None = None) -> CertificateReport:
    """Check ``diag(d) - Q > 0`` and, when it holds, the exponential rate bound."""
    q = q_matrix(net) if q is None else np.asarray(q, dtype=float)
    d = net.damping
    tol = psd_tol(q)
    margin, _ = min_eigen_sym(np.diag(d) - q)
    feasible = margin > tol
    sigma = None
    if feasible:
        lam, _ = min_eigen_sym(2.0 * np.diag(d) - 2.0 * q)
        sigma = SIGMA_SAFETY * lam * float(np.min(net.tau))
    return CertificateReport(feasible, margin, sigma, q, d, tol)


def lemma1_matrix(
    mats: InterconnectionMatrices, eps: EipProfile, weights: LyapunovWeights
) -> np.ndarray:
    if mats.size > DENSE_LIMIT or not mats.dense:
        raise ValueError(
            f"stacked size {mats.size} is above {DENSE_LIMIT}; "
            "use certify_theorem1, which needs only the n x n bound"
        )
    if weights.c.shape != (mats.size,):
        raise ValueError(f"weights have length {weights.c.size}, expected {mats.size}")
    a = mats.m - np.diag(eps.eps)
    ca = weights.c[:, None] * a
    return ca + ca.T


def verify_lemma1(
    mats: InterconnectionMatrices, eps: EipProfile, weights: LyapunovWeights
) -> tuple[bool, float]:
    """Diagonal-stability test ``C(M - E) + (M - E)^T C < 0``; returns (verdict, lambda_max)."""
    s = lemma1_matrix(mats, eps, weights)
    w, _ = jacobi_eigh(s)
    lam_max = float(w[-1])
    return lam_max < -psd_tol(s), lam_max


def identity_weights(mats: InterconnectionMatrices) -> LyapunovWeights:
    return LyapunovWeights(np.ones(mats.size))
