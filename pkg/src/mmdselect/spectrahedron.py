"""First-order optimization over the set of PSD matrices with fixed trace.

The mirror map is the von Neumann entropy, so a step multiplies the iterate by
a matrix exponential in the eigenbasis and renormalizes the trace:

    Y = exp(log Z - step * G),   Z+ = tau * Y / tr(Y).

``smd_run`` iterates this update with stochastic gradient draws and returns
the uniform average of the iterates, the estimator the convergence rate is
stated for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RandomSource
from .core import _freeze as _freeze_input


@dataclass(frozen=True)
class SpectraPoint:
    """Symmetric PSD matrix with fixed trace ``tau``."""

    Z: np.ndarray
    tau: float = 1.0
    eigen_floor: float | None = None

    def __post_init__(self):
        Z = _freeze_input(self.Z)
        if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
            raise ValueError("Z must be square")
        scale = max(1.0, float(np.max(np.abs(Z))))
        if float(np.max(np.abs(Z - Z.T))) > 1e-10 * scale:
            raise ValueError("Z must be symmetric")
        if not self.tau > 0:
            raise ValueError("trace target must be positive")
        w = np.linalg.eigvalsh(Z)
        if float(w[0]) < -1e-9 * max(1.0, self.tau):
            raise ValueError("Z must be positive semidefinite")
        if abs(float(np.trace(Z)) - self.tau) > 1e-9 * max(1.0, self.tau):
            raise ValueError("trace of Z must equal tau")
        Z.flags.writeable = False
        object.__setattr__(self, "Z", Z)
        if self.eigen_floor is None:
            object.__setattr__(self, "eigen_floor", 1e-12 * self.tau)

    @property
    def dim(self) -> int:
        return self.Z.shape[0]

    @classmethod
    def identity(cls, k: int, tau: float = 1.0) -> "SpectraPoint":
        return cls(np.eye(k) * (tau / k), tau=tau)


def _check_symmetric(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(G))) if G.size else 0.0)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or float(np.max(np.abs(G - G.T))) > 1e-8 * scale:
        raise ValueError("gradient must be a symmetric matrix")
    return 0.5 * (G + G.T)


def mirror_step(p: SpectraPoint, G: np.ndarray, step: float) -> SpectraPoint:
    """One entropic step against gradient ``G`` (descent direction)."""
    G = _check_symmetric(G)
    if G.shape[0] != p.dim:
        raise ValueError("gradient dimension mismatch")
    w, U = np.linalg.eigh(p.Z)
    w = np.maximum(w, p.eigen_floor)
    logZ = (U * np.log(w)) @ U.T
    H = logZ - step * G
    H = 0.5 * (H + H.T)
    w2, U2 = np.linalg.eigh(H)
    e = np.exp(w2 - float(np.max(w2)))  # shift-invariant after trace renorm
    Y = (U2 * e) @ U2.T
    Y = 0.5 * (Y + Y.T)
    Znew = Y * (p.tau / float(np.trace(Y)))
    return SpectraPoint(Znew, tau=p.tau, eigen_floor=p.eigen_floor)


def bregman(p1: SpectraPoint, p2: SpectraPoint) -> float:
    """Von Neumann divergence ``tr(X log X - X log Y)`` for equal-trace points."""
    if p1.dim != p2.dim:
        raise ValueError("dimension mismatch")
    if abs(p1.tau - p2.tau) > 1e-12 * max(1.0, p1.tau):
        raise ValueError("trace targets must agree")
    w1, U1 = np.linalg.eigh(p1.Z)
    w1f = np.maximum(w1, p1.eigen_floor)
    term1 = float(np.sum(w1f * np.log(w1f)))
    w2, U2 = np.linalg.eigh(p2.Z)
    logY = (U2 * np.log(np.maximum(w2, p2.eigen_floor))) @ U2.T
    return term1 - float(np.sum(p1.Z * logY))


def entropy_radius(k: int, tau: float = 1.0) -> float:
    """Upper bound on the divergence from the scaled identity to any feasible
    point; the usual start ``Z = tau I / k`` gives at most ``tau log k``."""
    return tau * float(np.log(max(k, 2)))


def prop1_step_rule(T: int, radius: float, m_star: float | None = None, safety: float = 2.0):
    """Constant step ``sqrt(2 kappa V / (T M^2))`` with ``kappa = 1/2``.

    When ``m_star`` is unknown it is replaced by a running maximum of observed
    gradient operator norms inflated by ``safety``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")

    def rule(t: int, running_max: float) -> float:
        m = m_star if m_star is not None else safety * max(running_max, 1e-12)
        return float(np.sqrt(radius / T) / m)

    return rule


def smd_run(
    grad_oracle,
    p0: SpectraPoint,
    T_in: int,
    step_rule=None,
    rng: RandomSource | None = None,
) -> SpectraPoint:
    """Averaged stochastic mirror descent from ``p0``.

    ``grad_oracle(Z, gen)`` must return a symmetric matrix estimating a
    (sub)gradient at ``Z``; draws come from the generator spawned off ``rng``.
    Returns the uniform average of the ``T_in`` iterates, trace-renormalized.
    ``T_in = 0`` returns the start point unchanged.
    """
    if T_in < 0:
        raise ValueError("T_in must be >= 0")
    if T_in == 0:
        return p0
    if step_rule is None:
        step_rule = prop1_step_rule(T_in, entropy_radius(p0.dim, p0.tau))
    gen = (rng or RandomSource(0)).generator()
    point = p0
    acc = np.zeros_like(p0.Z)
    running_max = 0.0
    for t in range(1, T_in + 1):
        G = grad_oracle(point.Z, gen)
        G = _check_symmetric(G)
        running_max = max(running_max, float(np.linalg.norm(G, 2)))
        point = mirror_step(point, G, float(step_rule(t, running_max)))
        acc += point.Z
    avg = acc / T_in
    avg = 0.5 * (avg + avg.T)
    avg *= p0.tau / float(np.trace(avg))
    return SpectraPoint(avg, tau=p0.tau, eigen_floor=p0.eigen_floor)
