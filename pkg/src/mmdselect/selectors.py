"""Named selection strategies bridging kernels and solvers.

Each solver name implies a kernel family; ``make_selector`` validates the
pairing and returns an object with ``select(train, kernel, rng)`` usable by
the permutation test and the experiment drivers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    RandomSource,
    SelectionVector,
    TwoSampleData,
    derive_stream,
    make_selection,
    split_train_test,
)
from .gauss import GaussConfig, ccp_select, lambda_grid_select
from .linear import linear_coefficients, linear_select
from .mmd import GAUSSIAN, LINEAR, QUADRATIC, KernelSpec
from .quad import (
    RelaxConfig,
    assemble_quadratic,
    exact_select_bnb,
    greedy_select,
    local_search,
    relax_select,
)

SOLVER_FAMILIES = {
    "linear": LINEAR,
    "quad-greedy": QUADRATIC,
    "quad-local": QUADRATIC,
    "quad-exact": QUADRATIC,
    "quad-relax": QUADRATIC,
    "gauss-ccp": GAUSSIAN,
}


def kernel_for_solver(solver: str, bandwidth: float | None = None) -> KernelSpec:
    family = SOLVER_FAMILIES[solver]
    return KernelSpec(family, None if family == LINEAR else bandwidth)


def check_compatible(solver: str, kernel: KernelSpec) -> None:
    if solver not in SOLVER_FAMILIES:
        raise ValueError(f"unknown solver {solver!r}")
    if SOLVER_FAMILIES[solver] != kernel.family:
        raise ValueError(
            f"solver {solver!r} requires the {SOLVER_FAMILIES[solver]} kernel, "
            f"got {kernel.family}"
        )


@dataclass(frozen=True)
class Selector:
    """Budgeted selection strategy; ``options`` tunes the underlying solver."""

    name: str
    d: int
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SOLVER_FAMILIES:
            raise ValueError(f"unknown solver {self.name!r}")
        if self.d < 1:
            raise ValueError("budget d must be >= 1")

    def select(self, train: TwoSampleData, kernel: KernelSpec, rng: RandomSource) -> SelectionVector:
        selection, _ = self.select_with_diagnostics(train, kernel, rng)
        return selection

    def select_with_diagnostics(
        self, train: TwoSampleData, kernel: KernelSpec, rng: RandomSource
    ) -> tuple[SelectionVector, dict]:
        """Run the solver and also return reportable diagnostics (method,
        bounds, node counts, trajectory)."""
        check_compatible(self.name, kernel)
        d = self.d
        if self.name == "linear":
            selection, objective = linear_select(linear_coefficients(train), d)
            return selection, {"method": "linear", "objective": objective}
        if self.name == "gauss-ccp":
            cfg = GaussConfig(
                gamma=kernel.require_bandwidth(),
                lam=self.options.get("lam", 0.001),
                T_out=self.options.get("T_out", 6),
                T_in=self.options.get("T_in", 150),
                batch=self.options.get("batch", 256),
                rng=rng,
            )
            if self.options.get("lambda_grid"):
                cfg = replace(cfg, lambda_grid=tuple(self.options["lambda_grid"]))
                tr, val = split_train_test(
                    train, self.options.get("grid_val_fraction", 0.5), derive_stream(rng, 77)
                )
                cfg = replace(cfg, lam=lambda_grid_select(tr, val, cfg, d))
            result = ccp_select(train, cfg, d)
            return result.selection, {
                "method": "gauss-ccp",
                "lam": cfg.lam,
                "trajectory": result.trajectory,
            }

        qp = assemble_quadratic(train, kernel.require_bandwidth())
        if self.name == "quad-greedy":
            report = greedy_select(qp, d)
        elif self.name == "quad-local":
            g = greedy_select(qp, d)
            report = local_search(qp, d, _pad(g.support, d, qp.dim))
        elif self.name == "quad-exact":
            report = exact_select_bnb(qp, d, dim_cap=self.options.get("dim_cap", 30))
        else:
            cfg = self.options.get("relax_cfg") or RelaxConfig()
            _, report = relax_select(qp, d, cfg)
        diag = {"method": report.method, "value": report.value}
        if report.upper_bound is not None:
            diag["upper_bound"] = report.upper_bound
            diag["bound_certified"] = report.bound_certified
        if report.node_count is not None:
            diag["node_count"] = report.node_count
        return report.z, diag


def _pad(support, d, D):
    S = sorted(int(i) for i in support)
    for j in range(D):
        if len(S) >= min(d, D):
            break
        if j not in S:
            S.append(j)
    return sorted(S)


def make_selector(name: str, d: int, **options) -> Selector:
    return Selector(name, d, options)


@dataclass(frozen=True)
class OracleSelector:
    """Baseline that always returns a fixed support with equal weights."""

    support: tuple
    d: int
    name: str = "oracle"

    def select(self, train, kernel, rng) -> SelectionVector:
        z = np.zeros(train.dim)
        z[list(self.support)] = 1.0
        return make_selection(z, self.d)


@dataclass(frozen=True)
class RandomSelector:
    """Baseline that picks a uniformly random size-d support."""

    d: int
    name: str = "random"

    def select(self, train, kernel, rng) -> SelectionVector:
        g = rng.generator()
        idx = g.choice(train.dim, size=self.d, replace=False)
        z = np.zeros(train.dim)
        z[idx] = 1.0
        return make_selection(z, self.d)
