"""Current-superposition experiments: single paths, ensembles and g sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import binomtest

from .analytic import BranchSpec, induced_reduction_time
from .errors import EnsembleInvalid
from .hilbert import FockCutoff, ModelParams, coherent_state, compose, current_eigenstate
from .sde import IntegratorConfig, RngStream, TrajectoryRecord, evolve
from .stats import summarize

__all__ = [
    "ExperimentSpec",
    "EnsembleResult",
    "PathOutcome",
    "SweepPoint",
    "TrajectoryRecord",
    "initial_state",
    "run_trajectory",
    "run_ensemble",
    "sweep_g",
]

DEFAULT_THRESHOLD = 0.99
SWEEP_SAFETY = 5.0


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce a Monte-Carlo run.

    ``cutoff=None`` derives the Fock cutoff from alpha, g and t_max.
    ``stop_after`` ends each path that long after its stopping time
    (``None`` runs every path to ``t_max``).
    """

    params: ModelParams
    branch: BranchSpec
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t_max: float = 3.0
    threshold: float = DEFAULT_THRESHOLD
    n_paths: int = 1
    seed: int = 0
    cutoff: FockCutoff | None = None
    stop_after: float | None = None

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if not 0.0 <= self.threshold < 1.0:
            raise ValueError("threshold must lie in [0, 1)")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def fock(self) -> FockCutoff:
        if self.cutoff is not None:
            return self.cutoff
        return FockCutoff.auto(self.branch.alpha, self.params.g, self.t_max)

    def replace(self, **kw) -> "ExperimentSpec":
        return replace(self, **kw)


def initial_state(branch: BranchSpec, cutoff: FockCutoff) -> np.ndarray:
    """(c1 |+x> + c2 |-x>) (x) |alpha>."""
    spin = branch.c1 * current_eigenstate(1) + branch.c2 * current_eigenstate(-1)
    return compose(spin, coherent_state(branch.alpha, cutoff))


def run_trajectory(spec: ExperimentSpec, path_index: int = 0,
                   state: np.ndarray | None = None) -> TrajectoryRecord:
    """Integrate one path; a tripped truncation monitor yields ``valid=False``."""
    psi0 = initial_state(spec.branch, spec.fock) if state is None else state
    rec = evolve(psi0, spec.params, spec.integrator, spec.t_max,
                 RngStream(spec.seed, path_index), threshold=spec.threshold,
                 stop_after=spec.stop_after, on_truncation="flag")
    rec.path_index = path_index
    return rec


@dataclass(frozen=True)
class PathOutcome:
    path_index: int
    stopping_time: float | None
    outcome: int | None


@dataclass
class EnsembleResult:
    paths: list
    n_plus: int
    n_minus: int
    n_unreduced: int
    mean_tau: float | None
    std_tau: float | None
    stderr_tau: float | None
    records: list | None = None

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def stopping_times(self) -> np.ndarray:
        return np.array([p.stopping_time for p in self.paths if p.stopping_time is not None])

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([p.outcome for p in self.paths if p.outcome is not None], dtype=int)


def _aggregate(records, keep_records):
    paths = [PathOutcome(r.path_index, r.stopping_time, r.outcome) for r in records]
    taus = [p.stopping_time for p in paths if p.stopping_time is not None]
    mean = std = stderr = None
    if taus:
        s = summarize(taus)
        mean, std, stderr = s.mean, s.std, s.stderr
    return EnsembleResult(
        paths=paths,
        n_plus=sum(p.outcome == 1 for p in paths),
        n_minus=sum(p.outcome == -1 for p in paths),
        n_unreduced=sum(p.outcome is None for p in paths),
        mean_tau=mean,
        std_tau=std,
        stderr_tau=stderr,
        records=list(records) if keep_records else None,
    )


def run_ensemble(spec: ExperimentSpec, workers: int = 1,
                 keep_records: bool = True) -> EnsembleResult:
    """Run paths 0..n_paths-1 and aggregate in path order.

    Each path draws its noise from ``RngStream(seed, path_index)``, so the
    result does not depend on ``workers``.
    """
    psi0 = initial_state(spec.branch, spec.fock)

    def one(i):
        return run_trajectory(spec, i, psi0)

    if workers <= 1:
        records = [one(i) for i in range(spec.n_paths)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(spec.n_paths)))
    bad = [r.path_index for r in records if not r.valid]
    if bad:
        raise EnsembleInvalid(f"truncation monitor tripped on paths {bad[:10]}")
    return _aggregate(records, keep_records)


@dataclass
class SweepPoint:
    g: float
    n_paths: int
    n_reduced: int
    mean_tau: float | None
    std_tau: float | None
    stderr_tau: float | None
    t_max: float
    n_max: int
    result: EnsembleResult | None = None


def sweep_t_max(spec: ExperimentSpec, g: float, safety: float = SWEEP_SAFETY) -> float:
    b = spec.branch
    return safety * induced_reduction_time(spec.params.lam, g, b.p1, b.p2)


def sweep_g(template: ExperimentSpec, g_values, workers: int = 1,
            safety: float = SWEEP_SAFETY, keep_results: bool = False) -> list:
    """Mean stopping time per coupling.

    For each g, ``t_max`` is ``safety`` times the induced reduction scale and
    the cutoff is re-derived.  Paths stop at reduction unless the template
    sets ``stop_after``.  Every g uses the template seed.
    """
    g_values = [float(g) for g in g_values]
    if not g_values or any(g <= 0 for g in g_values):
        raise ValueError("g values must be positive")
    stop_after = 0.0 if template.stop_after is None else template.stop_after
    out = []
    for g in g_values:
        t_max = sweep_t_max(template, g, safety)
        spec = template.replace(
            params=template.params.replace(g=g),
            t_max=t_max,
            cutoff=FockCutoff.auto(template.branch.alpha, g, t_max),
            stop_after=stop_after,
        )
        res = run_ensemble(spec, workers=workers, keep_records=False)
        out.append(SweepPoint(
            g=g,
            n_paths=res.n_paths,
            n_reduced=res.n_paths - res.n_unreduced,
            mean_tau=res.mean_tau,
            std_tau=res.std_tau,
            stderr_tau=res.stderr_tau,
            t_max=t_max,
            n_max=spec.fock.n_max,
            result=res if keep_results else None,
        ))
    return out


def binomial_pvalue(k: int, n: int, p: float = 0.5) -> float:
    """Two-sided exact binomial test p-value."""
    return float(binomtest(k, n, p).pvalue)


def fraction_band(p: float, n: int, n_sigma: float = 3.0) -> tuple:
    half = n_sigma * math.sqrt(p * (1 - p) / n)
    return p - half, p + half
