"""Shared data model: two-sample datasets, sparse selection vectors, seeded
random streams, delimited-table ingestion, and train/test splitting."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


class DataFormatError(ValueError):
    """Raised when an input table cannot be parsed into a numeric matrix."""


def _splitmix64(x: int) -> int:
    # Bijective 64-bit mixer (splitmix64 finalizer).
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RandomSource:
    """Deterministic, hierarchically splittable source of randomness.

    A source is identified by ``(master_seed, stream_id)``.  Identical pairs
    yield identical number streams; distinct pairs yield statistically
    independent streams.  Child sources are derived with :func:`derive_stream`,
    which for a fixed parent maps distinct labels to distinct stream ids (a
    composition of 64-bit bijections).
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh numpy generator for this (seed, stream) pair."""
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_id,))
        )


def derive_stream(rng: RandomSource, label: int) -> RandomSource:
    """Child source with a stream id derived from (stream_id, label)."""
    child = _splitmix64(rng.stream_id ^ _splitmix64(int(label) & _MASK64))
    return RandomSource(rng.master_seed, child)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TwoSampleData:
    """Two groups of samples sharing the same variables (rows = observations)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("samples must be 2-D arrays (rows = observations)")
        if X.shape[0] < 1 or Y.shape[0] < 1:
            raise ValueError("each group needs at least one sample")
        if X.shape[1] != Y.shape[1]:
            raise ValueError(
                f"column mismatch: group 1 has {X.shape[1]} variables, group 2 has {Y.shape[1]}"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("all entries must be finite")
        object.__setattr__(self, "X", _freeze(X))
        object.__setattr__(self, "Y", _freeze(Y))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def swapped(self) -> "TwoSampleData":
        return TwoSampleData(self.Y, self.X)


@dataclass(frozen=True)
class SelectionVector:
    """Unit-norm direction with at most ``d`` nonzero coordinates.

    ``support`` is the sorted tuple of nonzero indices (0-based).  ``no_signal``
    marks selections produced from data carrying no detectable group
    difference (an arbitrary feasible direction was returned).
    """

    z: np.ndarray
    d: int
    support: tuple = field(init=False)
    no_signal: bool = False

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64)
        if z.ndim != 1:
            raise ValueError("selection vector must be 1-D")
        if not np.all(np.isfinite(z)):
            raise ValueError("selection vector must be finite")
        nrm = float(np.linalg.norm(z))
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"selection vector must have unit norm, got {nrm!r}")
        if self.d < 1:
            raise ValueError("budget d must be >= 1")
        support = tuple(int(i) for i in np.flatnonzero(z))
        if len(support) > self.d:
            raise ValueError(f"support size {len(support)} exceeds budget d={self.d}")
        object.__setattr__(self, "z", _freeze(z))
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return self.z.shape[0]


def make_selection(z: np.ndarray, d: int, no_signal: bool = False) -> SelectionVector:
    """Normalize, zero out below-threshold noise, and wrap as a SelectionVector."""
    z = np.asarray(z, dtype=np.float64).copy()
    z[np.abs(z) < 1e-14] = 0.0
    nrm = np.linalg.norm(z)
    if nrm == 0.0:
        raise ValueError("cannot build a selection from the zero vector")
    return SelectionVector(z / nrm, d, no_signal=no_signal)


def _parse_table(path: str) -> np.ndarray:
    """Parse a comma-delimited numeric table; a non-numeric first row is a header."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.rstrip("\n").rstrip("\r") for line in fh]
    rows = [(i + 1, line) for i, line in enumerate(raw) if line.strip() != ""]
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    def parse_row(lineno, line):
        cells = [c.strip() for c in line.split(",")]
        vals = []
        for j, c in enumerate(cells):
            try:
                vals.append(float(c))
            except ValueError:
                return None, (lineno, j + 1, c)
        return vals, None

    first_vals, first_err = parse_row(*rows[0])
    start = 0
    if first_err is not None:
        start = 1  # header row
        if len(rows) == 1:
            raise DataFormatError(f"{path}: empty file (header only)")

    data = []
    width = None
    for lineno, line in rows[start:]:
        vals, err = parse_row(lineno, line)
        if err is not None:
            lno, col, cell = err
            raise DataFormatError(f"{path}: non-numeric cell {cell!r} at row {lno}, column {col}")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataFormatError(
                f"{path}: row {lineno} has {len(vals)} columns, expected {width}"
            )
        data.append(vals)
    return np.array(data, dtype=np.float64)


def load_two_sample(path_x: str, path_y: str) -> TwoSampleData:
    """Load the two groups from comma-delimited tables (one sample per row)."""
    X = _parse_table(path_x)
    Y = _parse_table(path_y)
    if X.shape[1] != Y.shape[1]:
        raise DataFormatError(
            f"dimension mismatch: {path_x} has {X.shape[1]} columns, "
            f"{path_y} has {Y.shape[1]}"
        )
    return TwoSampleData(X, Y)


def save_matrix(path: str, M: np.ndarray, header: list[str] | None = None) -> None:
    """Write a matrix in the tabular format; float repr round-trips bit-exactly."""
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_two_sample(data: TwoSampleData, path_x: str, path_y: str) -> None:
    save_matrix(path_x, data.X)
    save_matrix(path_y, data.Y)


def split_train_test(
    data: TwoSampleData, train_fraction: float, rng: RandomSource
) -> tuple[TwoSampleData, TwoSampleData]:
    """Disjoint row partition of both groups by uniform shuffle.

    Train sizes are ``floor(train_fraction * n)`` and ``floor(train_fraction * m)``;
    every part must be non-empty.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_tr = int(np.floor(train_fraction * data.n))
    m_tr = int(np.floor(train_fraction * data.m))
    if n_tr < 1 or m_tr < 1 or data.n - n_tr < 1 or data.m - m_tr < 1:
        raise ValueError(
            f"split with fraction {train_fraction} leaves an empty part "
            f"(n={data.n}, m={data.m})"
        )
    g = rng.generator()
    px = g.permutation(data.n)
    py = g.permutation(data.m)
    train = TwoSampleData(data.X[px[:n_tr]], data.Y[py[:m_tr]])
    test = TwoSampleData(data.X[px[n_tr:]], data.Y[py[m_tr:]])
    return train, test


def default_workers() -> int:
    """Worker count for parallel trial loops (results never depend on it)."""
    try:
        return max(1, int(os.environ.get("MMDSELECT_WORKERS", "1")))
    except ValueError:
        return 1
