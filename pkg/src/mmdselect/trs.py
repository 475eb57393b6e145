"""Sphere-constrained quadratic maximization oracle.

``trs_max`` computes ``max { z'Az + t'z : ||z||_2 = 1 }`` together with a
global-optimality certificate: a multiplier ``mu >= lambda_max(A)`` with
``||2(mu I - A) z - t||`` small.  The primary path extracts the rightmost
eigenvalue of a 2k x 2k generalized eigenvalue pencil built from ``(A, t)``;
when the linear term is (numerically) orthogonal to the leading eigenspace the
pencil eigenvector degenerates and a secular-equation fallback on the
eigendecomposition of ``A`` takes over, adding a leading-eigenspace component
to restore unit norm.

``lambda_set`` restricts the oracle to a coordinate subset and re-embeds the
maximizer, which is how every subset-selection routine scores a support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import _freeze as _freeze_input
from scipy.optimize import brentq


@dataclass(frozen=True)
class TrsSolution:
    value: float
    z: np.ndarray
    mu: float
    kkt_residual: float
    hard_case: bool

    def __post_init__(self):
        z = _freeze_input(self.z)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)


def _check_symmetric(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
    if float(np.max(np.abs(A - A.T))) > 1e-10 * scale:
        raise ValueError("A must be symmetric")
    return 0.5 * (A + A.T)


def _canonical_sign(z: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(z)))
    return -z if z[j] < 0 else z


def _residual(A, t, z, mu) -> float:
    return float(np.linalg.norm(2.0 * (mu * z - A @ z) - t))


def _secular(A: np.ndarray, t: np.ndarray, tol: float):
    """Eigendecomposition path: solve ||z(mu)|| = 1 for mu >= lambda_max(A)."""
    k = A.shape[0]
    lam, Q = np.linalg.eigh(A)
    lmax = float(lam[-1])
    tt = Q.T @ t
    tnorm = float(np.linalg.norm(t))
    scale = max(1.0, abs(lmax), tnorm)
    lead = lam >= lmax - 1e-10 * scale
    t_lead = float(np.linalg.norm(tt[lead]))

    def norm2(mu):
        return float(np.sum((tt / (2.0 * (mu - lam))) ** 2))

    def root_in(lo, hi):
        while norm2(hi) > 1.0:
            hi = lmax + 2.0 * (hi - lmax)
        return brentq(lambda m: norm2(m) - 1.0, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)

    hard = False
    if t_lead > 1e-9 * max(tnorm, 1e-300):
        # interior secular root exists: norm2 -> inf as mu -> lmax+
        lo = lmax + 0.5 * t_lead * (1.0 - 1e-12)
        if norm2(lo) < 1.0:
            lo = lmax + max(1e-300, 1e-15 * scale)
        mu = root_in(lo, lmax + 0.5 * tnorm + 1e-300)
        z = Q @ (tt / (2.0 * (mu - lam)))
    else:
        comp = ~lead
        zt = np.zeros(k)
        zt[comp] = tt[comp] / (2.0 * (lmax - lam[comp]))
        nrm2 = float(np.sum(zt**2))
        if nrm2 <= 1.0:
            # boundary multiplier; pad with a leading eigenvector to reach the sphere
            hard = True
            mu = lmax
            z = Q @ zt + np.sqrt(max(0.0, 1.0 - nrm2)) * Q[:, -1]
        else:
            mu = root_in(lmax + max(1e-300, 1e-15 * scale), lmax + 0.5 * tnorm + 1e-300)
            z = Q @ (tt / (2.0 * (mu - lam)))
    nz = float(np.linalg.norm(z))
    if nz > 0:
        z = z / nz
    return z, float(mu), hard


def trs_max(A: np.ndarray, t: np.ndarray, tol: float = 1e-9) -> TrsSolution:
    """Global maximum of ``z'Az + t'z`` over the unit sphere."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    A = _check_symmetric(A)
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    k = A.shape[0]
    if t.shape[0] != k:
        raise ValueError("t must match the dimension of A")
    tnorm = float(np.linalg.norm(t))

    if k == 1:
        z = np.array([1.0 if t[0] >= 0 else -1.0])
        mu = float(A[0, 0] + abs(t[0]) / 2.0)
        value = float(A[0, 0] + abs(t[0]))
        return TrsSolution(value, z, mu, _residual(A, t, z, mu), hard_case=bool(t[0] == 0.0))

    if tnorm == 0.0:
        lam, Q = np.linalg.eigh(A)
        z = _canonical_sign(Q[:, -1])
        mu = float(lam[-1])
        return TrsSolution(mu, z, mu, _residual(A, t, z, mu), hard_case=True)

    lmax = float(np.linalg.eigvalsh(A)[-1])
    z = mu = None
    hard = False

    # pencil path: rightmost eigenvalue of M0 + lambda M1 (solve M0 y = -lambda M1 y)
    ghat = -t / 2.0
    M0 = np.block([[-np.eye(k), -A], [-A, -np.outer(ghat, ghat)]])
    M1 = np.block([[np.zeros((k, k)), np.eye(k)], [np.eye(k), np.zeros((k, k))]])
    try:
        w, V = sla.eig(M0, -M1)
    except Exception:
        w = None
    if w is not None:
        usable = np.isfinite(w.real) & np.isfinite(w.imag)
        usable &= np.abs(w.imag) <= 1e-6 * (1.0 + np.abs(w.real))
        if np.any(usable):
            idx = np.flatnonzero(usable)
            j = idx[np.argmax(w.real[idx])]
            y = V[:, j]
            phase = y[np.argmax(np.abs(y))]
            y = (y * np.conj(phase / abs(phase))).real
            y1, y2 = y[:k], y[k:]
            s = float(t @ y2)
            # conditioning guard on y1 and the hard-case test on the linear term
            if (
                np.linalg.norm(y1) >= 1e-10 * np.linalg.norm(y)
                and abs(s) > tol * tnorm * np.linalg.norm(y2)
            ):
                cand = np.sign(s) * y1 / np.linalg.norm(y1)
                cand_mu = float(w[j].real)
                if (
                    _residual(A, t, cand, cand_mu) <= tol * (1.0 + tnorm)
                    and cand_mu >= lmax - tol
                ):
                    z, mu = cand, cand_mu

    if z is None:
        z, mu, hard = _secular(A, t, tol)

    value = float(z @ A @ z + t @ z)
    res = _residual(A, t, z, mu)
    if res > max(tol, 1e-6) * (1.0 + tnorm) or mu < lmax - max(tol, 1e-7):
        raise ArithmeticError(
            f"sphere maximizer failed its optimality certificate (residual {res:.3e})"
        )
    return TrsSolution(value, z, float(mu), res, hard)


def lambda_set(S, A: np.ndarray, t: np.ndarray, tol: float = 1e-9) -> TrsSolution:
    """Oracle value of a support: ``max z'Az + t'z`` with ``supp(z)`` inside S.

    The maximizer is re-embedded into the ambient dimension.
    """
    idx = sorted(int(i) for i in S)
    if not idx:
        raise ValueError("support must be non-empty")
    D = np.asarray(t).shape[0]
    if idx[0] < 0 or idx[-1] >= D:
        raise ValueError("support indices outside the variable range")
    if len(set(idx)) != len(idx):
        raise ValueError("support contains repeated indices")
    sub = trs_max(np.asarray(A)[np.ix_(idx, idx)], np.asarray(t)[idx], tol)
    z = np.zeros(D)
    z[idx] = sub.z
    return TrsSolution(sub.value, z, sub.mu, sub.kkt_residual, sub.hard_case)
