"""Closed-form limit solutions and time-scale predictors.

Branch amplitudes ``c1, c2`` multiply the *normalized* current eigenvectors
(1, +-1)/sqrt(2), so ``|c_i|^2`` are branch probabilities.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBranch
from .hilbert import FockCutoff, ModelParams, coherent_state, compose, current_eigenstate

# branches closer than this in phase space are not treated as orthogonal
SEPARATION_MIN = 4.0


@dataclass(frozen=True)
class BranchSpec:
    c1: complex
    c2: complex
    alpha: complex

    def __post_init__(self):
        for name in ("c1", "c2", "alpha"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        total = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"|c1|^2 + |c2|^2 = {total!r}, expected 1")

    @classmethod
    def equal(cls, alpha: complex) -> "BranchSpec":
        c = 1 / math.sqrt(2.0)
        return cls(c, c, alpha)

    @classmethod
    def from_probability(cls, p1: float, alpha: complex) -> "BranchSpec":
        return cls(math.sqrt(p1), math.sqrt(1.0 - p1), alpha)

    @property
    def p1(self) -> float:
        return abs(self.c1) ** 2

    @property
    def p2(self) -> float:
        return abs(self.c2) ** 2

    def swapped(self) -> "BranchSpec":
        return BranchSpec(self.c2, self.c1, self.alpha)


def _branch_state(d1, f1, d2, f2):
    psi = (compose(current_eigenstate(1), f1) * d1
           + compose(current_eigenstate(-1), f2) * d2)
    return psi / np.linalg.norm(psi)


def solution_g_zero(spec: BranchSpec, omega: float, nu: float, t: float,
                    cutoff: FockCutoff) -> np.ndarray:
    """Free evolution under omega a^dag a + nu/2 sigma_z.

    The current amplitudes rotate into each other at angle nu t / 2 while
    the field phase turns as exp(-i omega t).
    """
    c, s = math.cos(0.5 * nu * t), math.sin(0.5 * nu * t)
    c1t = spec.c1 * c - 1j * spec.c2 * s
    c2t = spec.c2 * c - 1j * spec.c1 * s
    field = coherent_state(cmath.exp(-1j * omega * t) * spec.alpha, cutoff)
    spin = c1t * current_eigenstate(1) + c2t * current_eigenstate(-1)
    return compose(spin, field)


def solution_g_dominated(spec: BranchSpec, g: float, t: float,
                         cutoff: FockCutoff) -> np.ndarray:
    """Evolution under g sigma_x (a + a^dag) alone.

    Each current branch sees the displacement exp(-i theta (a + a^dag)) =
    D(-i theta) with theta = +-g t, which shifts alpha by -+ i g t and
    contributes the phase -+ g t Re(alpha).
    """
    th = g * t
    re = spec.alpha.real
    f1 = coherent_state(spec.alpha - 1j * th, cutoff)
    f2 = coherent_state(spec.alpha + 1j * th, cutoff)
    d1 = spec.c1 * cmath.exp(-1j * th * re)
    d2 = spec.c2 * cmath.exp(1j * th * re)
    return _branch_state(d1, f1, d2, f2)


@dataclass
class DecaySolution:
    """``field`` is the un-normalized sum; ``weights`` the real decay factors."""

    field: np.ndarray
    weights: np.ndarray
    centers: np.ndarray


def decay_solution(components, lam: float, t: float, cutoff: FockCutoff) -> DecaySolution:
    """Solution of d|psi>/dt = -lam^2 a^dag a |psi> from sum_i c_i |alpha_i>.

    Each coherent component shrinks to alpha_i exp(-lam^2 t) and picks up
    the weight exp((|alpha_i exp(-lam^2 t)|^2 - |alpha_i|^2) / 2).
    """
    shrink = math.exp(-lam * lam * t)
    field = np.zeros(cutoff.levels, dtype=complex)
    weights, centers = [], []
    for c, alpha in components:
        alpha = complex(alpha)
        beta = alpha * shrink
        w = math.exp(0.5 * (abs(beta) ** 2 - abs(alpha) ** 2))
        field += complex(c) * w * coherent_state(beta, cutoff)
        weights.append(w)
        centers.append(beta)
    return DecaySolution(field=field, weights=np.array(weights), centers=np.array(centers))


def well_separated(alphas, min_sep: float = SEPARATION_MIN) -> bool:
    alphas = [complex(a) for a in alphas]
    return all(abs(x - y) >= min_sep for i, x in enumerate(alphas) for y in alphas[i + 1:])


def predicted_moments(g: float, t: float, p1: float, p2: float) -> dict:
    """Early-time Var(a) ~ 4 g^2 t^2 p1 p2 and Cov(sigma_x, -i(a - a^dag)) ~ -8 g t p1 p2."""
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-9:
        raise ValueError("p1, p2 must be non-negative and sum to 1")
    return {"var_a": 4.0 * g * g * t * t * p1 * p2, "cov": -8.0 * g * t * p1 * p2}


@dataclass(frozen=True)
class PredictedScales:
    tau_a: float
    s: float
    tau_sigma: float
    var_growth_rate: float
    cov_growth_rate: float


def reduction_time_field(lam: float, var0: float, delta2_0: complex) -> float:
    """Frozen-coefficient estimate Var0 / (lam^2 (|<(da)^2>|^2 + Var0^2))."""
    if var0 <= 0:
        return math.inf
    return var0 / (lam * lam * (abs(delta2_0) ** 2 + var0 * var0))


def induced_reduction_time(lam: float, g: float, p1: float, p2: float) -> float:
    """(lam^2 g^2 p1 p2)^(-1/3), the current reduction scale with O(1) prefactor 1."""
    q = lam * lam * g * g * p1 * p2
    if q <= 0:
        raise DegenerateBranch("no superposition to reduce (lam, g or p1 p2 is zero)")
    return q ** (-1.0 / 3.0)


def predicted_scales(params: ModelParams, spec: BranchSpec, var0: float,
                     delta2_0: complex) -> PredictedScales:
    if not params.lam > 0:
        raise ValueError("predicted scales need lam > 0")
    p1, p2 = spec.p1, spec.p2
    if p1 * p2 == 0:
        raise DegenerateBranch("p1 p2 = 0")
    tau_s = induced_reduction_time(params.lam, params.g, p1, p2)
    return PredictedScales(
        tau_a=reduction_time_field(params.lam, var0, delta2_0),
        s=tau_s,
        tau_sigma=tau_s,
        var_growth_rate=4.0 * params.g ** 2 * p1 * p2,
        cov_growth_rate=8.0 * abs(params.g) * p1 * p2,
    )
