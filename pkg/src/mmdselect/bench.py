"""Synthetic block-Gaussian generator, selection-quality metrics, and the
power / type-I / recovery experiment drivers.

Variables come in independent blocks of (by default) three coordinates; each
block shares a mean drawn uniformly on the unit sphere and a covariance drawn
from a Wishart distribution.  Only the first block is drawn separately for the
two groups, so the ground-truth informative set is the first block.  Modes:

* ``"shift"``     first-block mean and covariance both differ (default),
* ``"cov_shift"`` first-block means are shared, covariances differ,
* ``"null"``      the two groups share every parameter.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RandomSource, TwoSampleData, derive_stream, make_selection
from .mmd import KernelSpec, resolve_kernel
from .permutation import permutation_test
from .quad import QuadSolveReport, assemble_quadratic, greedy_select, relax_select
from .selectors import SOLVER_FAMILIES, kernel_for_solver

MODES = ("shift", "cov_shift", "null")


@dataclass(frozen=True)
class SynthSpec:
    blocks: int
    n: int
    m: int
    wishart_df: int = 3
    mode: str = "shift"
    block_size: int = 3
    seed: RandomSource = field(default_factory=lambda: RandomSource(0))

    def __post_init__(self):
        if self.blocks < 1 or self.n < 1 or self.m < 1:
            raise ValueError("blocks and sample sizes must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.wishart_df < self.block_size:
            raise ValueError("wishart_df must be at least the block size")

    @property
    def dim(self) -> int:
        return self.blocks * self.block_size


def wishart_sample(dim: int, df: int, gen: np.random.Generator) -> np.ndarray:
    """Wishart(df, I) draw via the Bartlett factor: lower triangle standard
    normal, diagonal chi with decreasing degrees of freedom."""
    if df < dim:
        raise ValueError(f"degrees of freedom {df} below dimension {dim}")
    L = np.zeros((dim, dim))
    for i in range(dim):
        L[i, i] = np.sqrt(gen.chisquare(df - i))
        for j in range(i):
            L[i, j] = gen.standard_normal()
    return L @ L.T


def _sphere_point(dim: int, gen: np.random.Generator) -> np.ndarray:
    v = gen.standard_normal(dim)
    nrm = np.linalg.norm(v)
    while nrm < 1e-12:
        v = gen.standard_normal(dim)
        nrm = np.linalg.norm(v)
    return v / nrm


def block_parameters(spec: SynthSpec, param_gen: np.random.Generator):
    """Per-block (mean, covariance) pairs for the two groups.  Under the null
    mode both groups reference the same parameter objects in every block."""
    b = spec.block_size
    px, py = [], []
    for blk in range(spec.blocks):
        mu = _sphere_point(b, param_gen)
        cov = wishart_sample(b, spec.wishart_df, param_gen)
        if blk == 0 and spec.mode != "null":
            mu2 = _sphere_point(b, param_gen)
            cov2 = wishart_sample(b, spec.wishart_df, param_gen)
            if spec.mode == "cov_shift":
                mu2 = mu
            px.append((mu, cov))
            py.append((mu2, cov2))
        else:
            px.append((mu, cov))
            py.append((mu, cov))
    return px, py


def synth_block_gaussian(spec: SynthSpec) -> tuple[TwoSampleData, tuple]:
    """Generate one dataset; returns it with the true informative index set
    (empty under the null mode)."""
    b = spec.block_size
    param_gen = derive_stream(spec.seed, 0).generator()
    sample_gen = derive_stream(spec.seed, 1).generator()
    px, py = block_parameters(spec, param_gen)

    def draw(count, params):
        out = np.empty((count, spec.dim))
        for blk, (mu, cov) in enumerate(params):
            L = np.linalg.cholesky(cov + 1e-12 * np.eye(b))
            out[:, blk * b : (blk + 1) * b] = mu + sample_gen.standard_normal((count, b)) @ L.T
        return out

    data = TwoSampleData(draw(spec.n, px), draw(spec.m, py))
    true_support = () if spec.mode == "null" else tuple(range(b))
    return data, true_support


@dataclass(frozen=True)
class SelectionMetrics:
    fdp: float
    ndp: float


def fdp_ndp(selected, true_support) -> SelectionMetrics:
    """False- and non-discovery proportions of a selected index set."""
    I = set(int(i) for i in selected)
    S = set(int(i) for i in true_support)
    if not I:
        raise ValueError("selected set is empty; FDP is undefined")
    if not S:
        raise ValueError("true support is empty; NDP is undefined")
    return SelectionMetrics(fdp=len(I - S) / len(I), ndp=len(S - I) / len(S))


@dataclass(frozen=True)
class ExperimentConfig:
    spec: SynthSpec
    selectors: tuple
    trials: int
    alpha: float = 0.05
    n_permutations: int = 200
    train_fraction: float = 0.5
    rng: RandomSource = field(default_factory=lambda: RandomSource(0))
    workers: int = 1
    corrected: bool = False
    bandwidths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class SelectorSummary:
    name: str
    mean: float
    sd: float
    values: tuple


@dataclass(frozen=True)
class ExperimentSummary:
    kind: str
    per_selector: tuple

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "selectors": [
                {"name": s.name, "mean": s.mean, "sd": s.sd} for s in self.per_selector
            ],
        }

    def to_table(self) -> str:
        lines = ["selector\tmean\tsd"]
        for s in self.per_selector:
            lines.append(f"{s.name}\t{s.mean:.6f}\t{s.sd:.6f}")
        return "\n".join(lines) + "\n"


def _selector_kernel(sel, bandwidths: dict) -> KernelSpec:
    name = getattr(sel, "name", "")
    family = SOLVER_FAMILIES.get(name)
    if family is None:
        return KernelSpec.linear() if name == "oracle" else kernel_for_solver("linear")
    return kernel_for_solver(name, bandwidths.get(family))


def _map_trials(fn, trials: int, workers: int):
    if workers <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(trials)))


def run_power_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Rejection rate of each selector over freshly generated trials.

    Under a null-mode generator this measures type-I error; otherwise power.
    Trials use derived streams and an ordered reduction, so the summary is
    identical for any worker count.
    """

    def one_trial(t: int):
        trial_rng = derive_stream(config.rng, t)
        spec = dataclasses.replace(config.spec, seed=derive_stream(trial_rng, 0))
        data, _ = synth_block_gaussian(spec)
        out = []
        for k, sel in enumerate(config.selectors):
            rep = permutation_test(
                data,
                _selector_kernel(sel, config.bandwidths),
                sel,
                config.n_permutations,
                config.alpha,
                config.train_fraction,
                derive_stream(trial_rng, 1),  # shared across selectors: common random numbers
                corrected=config.corrected,
            )
            out.append(1.0 if rep.reject else 0.0)
        return out

    rows = _map_trials(one_trial, config.trials, config.workers)
    per = []
    for k, sel in enumerate(config.selectors):
        vals = np.array([row[k] for row in rows])
        per.append(
            SelectorSummary(
                name=getattr(sel, "name", f"selector{k}"),
                mean=float(vals.mean()),
                sd=float(vals.std()),
                values=tuple(float(v) for v in vals),
            )
        )
    return ExperimentSummary(kind="power", per_selector=tuple(per))


def run_recovery_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Mean FDP/NDP of each selector against the generator's true support."""
    if config.spec.mode == "null":
        raise ValueError("recovery metrics need a non-null generator")

    def one_trial(t: int):
        trial_rng = derive_stream(config.rng, t)
        spec = dataclasses.replace(config.spec, seed=derive_stream(trial_rng, 0))
        data, true_support = synth_block_gaussian(spec)
        out = []
        for k, sel in enumerate(config.selectors):
            kernel = _selector_kernel(sel, config.bandwidths)
            kernel = resolve_kernel(kernel, data, getattr(sel, "d", None))
            selection = sel.select(data, kernel, derive_stream(trial_rng, 1))
            m = fdp_ndp(selection.support, true_support)
            out.append((m.fdp, m.ndp))
        return out

    rows = _map_trials(one_trial, config.trials, config.workers)
    per = []
    for k, sel in enumerate(config.selectors):
        fdps = np.array([row[k][0] for row in rows])
        ndps = np.array([row[k][1] for row in rows])
        per.append(
            SelectorSummary(
                name=getattr(sel, "name", f"selector{k}") + ":fdp",
                mean=float(fdps.mean()),
                sd=float(fdps.std()),
                values=tuple(float(v) for v in fdps),
            )
        )
        per.append(
            SelectorSummary(
                name=getattr(sel, "name", f"selector{k}") + ":ndp",
                mean=float(ndps.mean()),
                sd=float(ndps.std()),
                values=tuple(float(v) for v in ndps),
            )
        )
    return ExperimentSummary(kind="recovery", per_selector=tuple(per))


def prescreen_then_relax(
    data: TwoSampleData, c: float, d: int, prescreen_to: int = 200
) -> QuadSolveReport:
    """Large-dimension recipe: greedy pre-screen down to ``prescreen_to``
    variables, then the relaxation on the surviving block; support indices in
    the returned report refer to the ambient numbering."""
    qp = assemble_quadratic(data, c)
    if qp.dim <= prescreen_to:
        return relax_select(qp, d)[1]
    pre = greedy_select(qp, prescreen_to)
    keep = sorted(pre.support)
    sub = TwoSampleData(data.X[:, keep], data.Y[:, keep])
    _, rep = relax_select(assemble_quadratic(sub, c), d)
    z = np.zeros(data.dim)
    z[keep] = rep.z.z
    return QuadSolveReport(
        support=tuple(keep[i] for i in rep.support),
        z=make_selection(z, d),
        value=rep.value,
        method="prescreen+relax",
    )
