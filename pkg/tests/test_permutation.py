import numpy as np
import pytest

from mmdselect.core import RandomSource, TwoSampleData, derive_stream, make_selection, split_train_test
from mmdselect.mmd import KernelSpec, mmd_sq
from mmdselect.permutation import permutation_test
from mmdselect.selectors import OracleSelector, Selector


class RecordingSelector:
    name = "recording"
    d = 2

    def __init__(self, D):
        self.z = np.zeros(D)
        self.z[0] = 1.0
        self.seen = None

    def select(self, train, kernel, rng):
        self.seen = train
        return make_selection(self.z, self.d)


def iid_data(gen, n, m, D, shift=0.0):
    return TwoSampleData(gen.standard_normal((n, D)) + shift, gen.standard_normal((m, D)))


def test_constant_data_gives_p_value_one():
    # every projected sample identical -> all permuted statistics equal T
    data = TwoSampleData(np.ones((8, 2)), np.ones((6, 2)))
    rep = permutation_test(
        data, KernelSpec.linear(), OracleSelector((0,), 1), 50, 0.05, 0.5, RandomSource(3)
    )
    assert rep.p_value == 1.0
    assert not rep.reject


@pytest.mark.parametrize(
    "kernel",
    [KernelSpec.linear(), KernelSpec.quadratic(0.8), KernelSpec.gaussian(1.0)],
    ids=["linear", "quadratic", "gaussian"],
)
def test_statistic_matches_mmd_on_test_split(kernel):
    gen = np.random.default_rng(0)
    data = iid_data(gen, 10, 12, 3, shift=0.4)
    rng = RandomSource(17)
    sel = RecordingSelector(3)
    sel.z = np.array([0.6, -0.8, 0.0])  # mixed signs: catches projection shortcuts
    rep = permutation_test(data, kernel, sel, 10, 0.05, 0.5, rng)
    train, test = split_train_test(data, 0.5, derive_stream(rng, 0))
    assert np.array_equal(sel.seen.X, train.X)  # selector saw exactly the training split
    want = mmd_sq(kernel, rep.selection, test)
    assert rep.statistic == pytest.approx(want, abs=1e-10)


def test_training_rows_never_enter_permutations():
    # sentinel rows that deterministically land in the training split would
    # dominate every permuted statistic if leaked into the pool
    gen = np.random.default_rng(5)
    X = gen.standard_normal((8, 2))
    Y = gen.standard_normal((8, 2))
    rng = RandomSource(123)
    _, test = split_train_test(TwoSampleData(X, Y), 0.5, derive_stream(rng, 0))
    test_rows = {tuple(r) for r in np.vstack([test.X, test.Y])}
    sentinel = 1e6
    for i, row in enumerate(X):
        if tuple(row) not in test_rows:
            X[i] = sentinel
    for i, row in enumerate(Y):
        if tuple(row) not in test_rows:
            Y[i] = sentinel
    rep = permutation_test(
        TwoSampleData(X, Y), KernelSpec.linear(), OracleSelector((0,), 1), 30, 0.05, 0.5, rng
    )
    bound = 100.0  # any leaked sentinel row would push a statistic past 1e9
    assert np.max(np.abs(rep.permuted)) < bound
    assert abs(rep.statistic) < bound


def test_p_value_granularity():
    gen = np.random.default_rng(9)
    data = iid_data(gen, 12, 12, 2)
    n_p = 40
    rep = permutation_test(
        data, KernelSpec.linear(), OracleSelector((0,), 1), n_p, 0.05, 0.5, RandomSource(2)
    )
    assert abs(rep.p_value * n_p - round(rep.p_value * n_p)) < 1e-12


def test_corrected_convention():
    gen = np.random.default_rng(29)
    data = iid_data(gen, 12, 12, 2)
    rep = permutation_test(
        data, KernelSpec.linear(), OracleSelector((0,), 1), 19, 0.05, 0.5, RandomSource(8),
        corrected=True,
    )
    k = round(rep.p_value * 20)
    assert rep.p_value == pytest.approx(k / 20.0, abs=1e-12)
    assert rep.p_value >= 1.0 / 20.0


def test_deterministic_given_seed():
    gen = np.random.default_rng(31)
    data = iid_data(gen, 16, 16, 4, shift=0.3)
    sel = Selector("linear", 2)
    a = permutation_test(data, KernelSpec.linear(), sel, 25, 0.05, 0.5, RandomSource(77))
    b = permutation_test(data, KernelSpec.linear(), sel, 25, 0.05, 0.5, RandomSource(77))
    assert a.statistic == b.statistic
    assert np.array_equal(a.permuted, b.permuted)
    assert a.p_value == b.p_value


def test_type_i_error_near_nominal():
    # identically distributed groups: rejection rate stays near alpha
    sel = Selector("linear", 2)
    rejections = 0
    trials = 500
    for t in range(trials):
        gen = np.random.default_rng(10_000 + t)
        data = iid_data(gen, 20, 20, 3)
        rep = permutation_test(
            data, KernelSpec.linear(), sel, 99, 0.05, 0.5, RandomSource(5, t)
        )
        rejections += rep.reject
    rate = rejections / trials
    assert 0.03 <= rate <= 0.07


def test_power_on_separated_data():
    sel = Selector("quad-greedy", 2)
    zeros = 0
    for s in range(10):
        gen = np.random.default_rng(600 + s)
        data = iid_data(gen, 40, 40, 3, shift=3.0)
        rep = permutation_test(
            data, KernelSpec("quadratic"), sel, 200, 0.05, 0.5, RandomSource(41, s)
        )
        zeros += rep.p_value == 0.0
    assert zeros >= 9


def test_exchangeability_mean_p_under_corrected():
    sel = OracleSelector((0,), 1)
    ps = []
    for t in range(500):
        gen = np.random.default_rng(40_000 + t)
        data = iid_data(gen, 8, 8, 2)
        rep = permutation_test(
            data, KernelSpec.linear(), sel, 39, 0.05, 0.5, RandomSource(13, t), corrected=True
        )
        ps.append(rep.p_value)
    assert 0.45 <= float(np.mean(ps)) <= 0.55


def test_validation_errors():
    gen = np.random.default_rng(1)
    data = iid_data(gen, 6, 6, 2)
    sel = OracleSelector((0,), 1)
    with pytest.raises(ValueError, match="n_permutations"):
        permutation_test(data, KernelSpec.linear(), sel, 0, 0.05)
    with pytest.raises(ValueError, match="alpha"):
        permutation_test(data, KernelSpec.linear(), sel, 10, 1.5)
    tiny = TwoSampleData(np.zeros((1, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError, match="empty part"):
        permutation_test(tiny, KernelSpec.linear(), sel, 10, 0.05)
