"""Independent reference computations used to validate the solvers.

Nothing here imports solver internals: the sphere maximum comes from the 1-D
convex dual evaluated in the eigenbasis, subset selection from exhaustive
enumeration, and low-dimensional maxima from refined grid search.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import minimize_scalar


def dual_trs_value(A: np.ndarray, t: np.ndarray) -> float:
    """max { z'Az + t'z : ||z|| = 1 } via min over mu >= lmax of
    mu + t'(mu I - A)^{-1} t / 4 (strong duality)."""
    A = np.asarray(A, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    lam, Q = np.linalg.eigh(A)
    lmax = float(lam[-1])
    tt = Q.T @ t
    tn = float(np.linalg.norm(t))
    if tn == 0.0:
        return lmax
    scale = max(1.0, abs(lmax), tn)
    eta_min = 1e-11 * scale

    def h(eta):
        mu = lmax + eta
        return mu + 0.25 * float(np.sum(tt * tt / (mu - lam)))

    res = minimize_scalar(
        h, bounds=(eta_min, 0.5 * tn + scale), method="bounded",
        options={"xatol": 1e-13, "maxiter": 500},
    )
    return float(min(res.fun, h(eta_min)))


def brute_force_quad(A: np.ndarray, t: np.ndarray, d: int):
    """Exhaustive subset enumeration scored with the dual sphere oracle."""
    D = len(t)
    best, best_sup = -np.inf, None
    for S in itertools.combinations(range(D), min(d, D)):
        idx = list(S)
        v = dual_trs_value(A[np.ix_(idx, idx)], t[idx])
        if v > best + 1e-12:
            best, best_sup = v, S
    return best, best_sup


def brute_force_linear(a: np.ndarray, d: int):
    """Exhaustive max of ||a_S||_2 over supports of size <= d."""
    D = len(a)
    best, best_sup = -np.inf, None
    for size in range(1, min(d, D) + 1):
        for S in itertools.combinations(range(D), size):
            v = float(np.linalg.norm(a[list(S)]))
            if v > best + 1e-15:
                best, best_sup = v, S
    return best, best_sup


def grid_sphere_max(A: np.ndarray, t: np.ndarray, n_points: int = 10000, refine: int = 6) -> float:
    """Refined mesh search over the unit sphere; intended for k <= 3."""
    k = len(t)
    if k == 1:
        return float(max(A[0, 0] + t[0], A[0, 0] - t[0]))
    gen = np.random.default_rng(12345)
    Z = gen.standard_normal((n_points, k))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)

    def value(P):
        return np.einsum("ij,jk,ik->i", P, A, P) + P @ t

    vals = value(Z)
    center = Z[int(np.argmax(vals))]
    best = float(vals.max())
    radius = 0.5
    for _ in range(refine):
        P = center + radius * gen.standard_normal((2000, k))
        P /= np.linalg.norm(P, axis=1, keepdims=True)
        vals = value(P)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            center = P[j]
        radius *= 0.25
    return best


def central_difference_gradient(fn, Z: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Symmetric-matrix central differences of a scalar function of Z."""
    D = Z.shape[0]
    G = np.zeros((D, D))
    for i in range(D):
        for j in range(i, D):
            E = np.zeros((D, D))
            E[i, j] = E[j, i] = 1.0
            G[i, j] = G[j, i] = (fn(Z + h * E) - fn(Z - h * E)) / (2 * h)
            if i != j:
                # off-diagonal perturbation moves two entries; gradient wrt one
                G[i, j] = G[j, i] = G[i, j] / 2.0
    return G
