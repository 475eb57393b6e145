"""End-to-end two-sample test: train a selection on one split, calibrate the
projected-MMD statistic on the other by random relabeling.

The permutation p-value is ``#{T_t >= T} / N_p`` by default (granularity
exactly ``1/N_p``, zero attainable); the standard add-one correction
``(1 + #{T_t >= T}) / (1 + N_p)`` sits behind a flag.  Rejection is strict:
``p < alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RandomSource, SelectionVector, TwoSampleData, derive_stream, split_train_test
from .core import _freeze as _freeze_input
from .mmd import KernelSpec, gram, resolve_kernel

_SPLIT_STREAM = 0
_TRAIN_STREAM = 1
_PERM_STREAM = 2


@dataclass(frozen=True)
class PermutationReport:
    statistic: float
    permuted: np.ndarray
    p_value: float
    alpha: float
    reject: bool
    selection: SelectionVector
    kernel: KernelSpec
    n_permutations: int
    corrected: bool
    train_sizes: tuple
    test_sizes: tuple
    seed: tuple

    def __post_init__(self):
        p = _freeze_input(self.permuted)
        p.flags.writeable = False
        object.__setattr__(self, "permuted", p)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "n_permutations": self.n_permutations,
            "corrected": self.corrected,
            "train_sizes": list(self.train_sizes),
            "test_sizes": list(self.test_sizes),
            "seed": list(self.seed),
        }


def _block_stat(G: np.ndarray, ix: np.ndarray, iy: np.ndarray, n: int, m: int) -> float:
    sxx = float(G[np.ix_(ix, ix)].sum())
    syy = float(G[np.ix_(iy, iy)].sum())
    sxy = float(G[np.ix_(ix, iy)].sum())
    return sxx / (n * n) + syy / (m * m) - 2.0 * sxy / (n * m)


def permutation_test(
    data: TwoSampleData,
    kernel: KernelSpec,
    selector,
    n_permutations: int,
    alpha: float,
    train_fraction: float = 0.5,
    rng: RandomSource | None = None,
    corrected: bool = False,
) -> PermutationReport:
    """Two-sample test with a trained sparse projection.

    ``selector`` must provide ``select(train, kernel, rng) -> SelectionVector``.
    An unresolved kernel bandwidth is filled from the training split only;
    permutations reshuffle pooled test rows into groups of the test-split
    sizes and never touch training rows.
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    rng = rng or RandomSource(0)

    train, test = split_train_test(data, train_fraction, derive_stream(rng, _SPLIT_STREAM))
    kernel = resolve_kernel(kernel, train, getattr(selector, "d", None))
    selection = selector.select(train, kernel, derive_stream(rng, _TRAIN_STREAM))

    # pooled test Gram computed once; permutation rounds only re-sum subblocks
    pooled = np.vstack([test.X, test.Y])
    n_te, m_te = test.n, test.m
    G = gram(kernel, selection, pooled, pooled)
    base = np.arange(n_te + m_te)
    stat = _block_stat(G, base[:n_te], base[n_te:], n_te, m_te)

    perm_root = derive_stream(rng, _PERM_STREAM)
    permuted = np.empty(n_permutations)
    for t in range(n_permutations):
        p = derive_stream(perm_root, t).generator().permutation(n_te + m_te)
        permuted[t] = _block_stat(G, p[:n_te], p[n_te:], n_te, m_te)

    exceed = int(np.count_nonzero(permuted >= stat))
    if corrected:
        p_value = (1 + exceed) / (1 + n_permutations)
    else:
        p_value = exceed / n_permutations
    return PermutationReport(
        statistic=float(stat),
        permuted=permuted,
        p_value=float(p_value),
        alpha=float(alpha),
        reject=bool(p_value < alpha),
        selection=selection,
        kernel=kernel,
        n_permutations=n_permutations,
        corrected=corrected,
        train_sizes=(train.n, train.m),
        test_sizes=(n_te, m_te),
        seed=(rng.master_seed, rng.stream_id),
    )
