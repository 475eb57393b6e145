import numpy as np
import pytest

from mmdselect.core import RandomSource
from mmdselect.spectrahedron import (
    SpectraPoint,
    bregman,
    entropy_radius,
    mirror_step,
    prop1_step_rule,
    smd_run,
)


def random_density(gen, k, tau=1.0):
    B = gen.standard_normal((k, k))
    Z = B @ B.T + 1e-6 * np.eye(k)
    return SpectraPoint(Z * (tau / np.trace(Z)), tau=tau)


def test_point_validation():
    with pytest.raises(ValueError, match="symmetric"):
        SpectraPoint(np.array([[1.0, 0.5], [0.0, 0.0]]), tau=1.0)
    with pytest.raises(ValueError, match="semidefinite"):
        SpectraPoint(np.diag([1.5, -0.5]), tau=1.0)
    with pytest.raises(ValueError, match="trace"):
        SpectraPoint(np.eye(2), tau=1.0)


def test_mirror_step_zero_gradient_identity():
    gen = np.random.default_rng(0)
    p = random_density(gen, 4)
    q = mirror_step(p, np.zeros((4, 4)), 0.3)
    assert np.allclose(q.Z, p.Z, atol=1e-12)


def test_mirror_step_scalar_softmax():
    p = SpectraPoint(np.eye(2) / 2.0, tau=1.0)
    step = 1.0
    g = np.log(3.0)
    q = mirror_step(p, np.diag([g, 0.0]), step)
    assert np.allclose(np.diag(q.Z), [0.25, 0.75], atol=1e-12)
    assert q.Z[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_mirror_step_rotation_equivariance():
    gen = np.random.default_rng(5)
    for _ in range(5):
        k = 4
        p = random_density(gen, k)
        G = gen.standard_normal((k, k))
        G = 0.5 * (G + G.T)
        Q, _ = np.linalg.qr(gen.standard_normal((k, k)))
        lhs = mirror_step(SpectraPoint(Q @ p.Z @ Q.T, tau=1.0), Q @ G @ Q.T, 0.2).Z
        rhs = Q @ mirror_step(p, G, 0.2).Z @ Q.T
        assert np.allclose(lhs, rhs, atol=1e-8)


def test_mirror_step_rejects_asymmetric_gradient():
    p = SpectraPoint.identity(3)
    with pytest.raises(ValueError, match="symmetric"):
        mirror_step(p, np.triu(np.ones((3, 3))), 0.1)


def test_bregman_identity_zero():
    gen = np.random.default_rng(1)
    p = random_density(gen, 3)
    assert bregman(p, p) == pytest.approx(0.0, abs=1e-10)


def test_bregman_scalar_example():
    a = SpectraPoint(np.diag([0.5, 0.5]), tau=1.0)
    b = SpectraPoint(np.diag([0.25, 0.75]), tau=1.0)
    expected = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)
    assert bregman(a, b) == pytest.approx(expected, abs=1e-12)


def test_bregman_nonnegative_sweep():
    gen = np.random.default_rng(3)
    for _ in range(100):
        p = random_density(gen, 3)
        q = random_density(gen, 3)
        assert bregman(p, q) >= -1e-10


def test_entropy_radius_bound():
    gen = np.random.default_rng(9)
    k = 5
    start = SpectraPoint.identity(k)
    for _ in range(20):
        q = random_density(gen, k)
        assert bregman(q, start) <= entropy_radius(k) + 1e-9


def test_smd_linear_objective_converges():
    # minimize <diag(1, 0), Z>: optimum 0 at Z = diag(0, 1)
    C = np.diag([1.0, 0.0])
    rule = prop1_step_rule(2000, entropy_radius(2), m_star=1.0)
    out = smd_run(lambda Z, gen: C, SpectraPoint.identity(2), 2000, rule, RandomSource(0))
    assert out.Z[0, 0] < 0.05
    assert np.trace(out.Z) == pytest.approx(1.0, abs=1e-9)


def test_smd_zero_oracle_returns_start():
    p = SpectraPoint.identity(3)
    out = smd_run(lambda Z, gen: np.zeros((3, 3)), p, 50, rng=RandomSource(1))
    assert np.allclose(out.Z, p.Z, atol=1e-10)


def test_smd_t_in_zero_returns_start():
    p = SpectraPoint.identity(3)
    assert smd_run(lambda Z, gen: np.eye(3), p, 0) is p


def test_smd_doubling_budget_does_not_hurt():
    # noisy linear objective; median final gap over seeds must not grow with T
    C = np.diag([1.0, 0.0])

    def noisy(Z, gen):
        E = gen.standard_normal((2, 2)) * 0.3
        return C + 0.5 * (E + E.T)

    def gap(T, seed):
        rule = prop1_step_rule(T, entropy_radius(2), m_star=2.0)
        out = smd_run(noisy, SpectraPoint.identity(2), T, rule, RandomSource(seed))
        return out.Z[0, 0]

    gaps_short = np.median([gap(250, s) for s in range(10)])
    gaps_long = np.median([gap(500, s) for s in range(10)])
    assert gaps_long <= gaps_short + 1e-3


def test_smd_iterates_feasible():
    gen = np.random.default_rng(12)
    seen = []

    def oracle(Z, g):
        seen.append(Z)
        B = gen.standard_normal((3, 3))
        return 0.5 * (B + B.T)

    smd_run(oracle, SpectraPoint.identity(3), 40, rng=RandomSource(4))
    for Z in seen:
        w = np.linalg.eigvalsh(Z)
        assert w[0] >= -1e-9
        assert np.trace(Z) == pytest.approx(1.0, abs=1e-9)


def test_smd_rejects_asymmetric_oracle():
    with pytest.raises(ValueError, match="symmetric"):
        smd_run(lambda Z, g: np.triu(np.ones((2, 2))), SpectraPoint.identity(2), 3)


def test_objective_gap_decay_rate():
    # deterministic linear objective: empirical log-log slope of the gap vs T
    C = np.diag([1.0, 0.0])
    Ts = [100, 1000, 10000]
    gaps = []
    for T in Ts:
        rule = prop1_step_rule(T, entropy_radius(2), m_star=1.0)
        out = smd_run(lambda Z, g: C, SpectraPoint.identity(2), T, rule, RandomSource(0))
        gaps.append(out.Z[0, 0])
    slope = np.polyfit(np.log(Ts), np.log(gaps), 1)[0]
    assert slope <= -0.4
