"""Independent-propagation checks of the closed-form solutions and the
integrator's Schrodinger limit.  Used by ``qreduce oracle-check``."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .analytic import BranchSpec, decay_solution, solution_g_dominated, solution_g_zero
from .experiment import initial_state
from .hilbert import FockCutoff, ModelParams, build_operators, fidelity
from .sde import IntegratorConfig, RngStream, evolve

FIDELITY_TOL = 1e-8
SCHRODINGER_TOL = 1e-6


@dataclass
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: dict

    def as_dict(self):
        return asdict(self)


def propagate(H, psi, t):
    return expm_multiply(-1j * t * H, psi)


def schrodinger_infidelity(dt: float, t: float = 1.0, n_max: int = 20) -> float:
    """1 - fidelity of the lam = 0 integrator against exp(-iHt) at
    omega = nu = 0.5, g = 1, alpha = 1, equal branches."""
    params = ModelParams(omega=0.5, nu=0.5, g=1.0, lam=0.0)
    cut = FockCutoff(n_max)
    psi0 = initial_state(BranchSpec.equal(1.0), cut)
    cfg = IntegratorConfig(dt=dt, sample_interval=dt * round(0.01 / dt),
                           truncation_tolerance=None)
    rec = evolve(psi0, params, cfg, t, RngStream(0, 0))
    exact = propagate(build_operators(params, cut).H, psi0, t)
    return 1.0 - fidelity(rec.final_state, exact)


def check_schrodinger_limit(dt: float = 1e-4) -> CheckResult:
    inf1 = schrodinger_infidelity(dt)
    inf2 = schrodinger_infidelity(dt / 2)
    ratio = inf1 / inf2 if inf2 > 0 else math.inf
    return CheckResult(
        "schrodinger_limit", inf1, SCHRODINGER_TOL,
        bool(inf1 <= SCHRODINGER_TOL and ratio >= 3.5),
        {"infidelity_dt": inf1, "infidelity_half_dt": inf2, "ratio": ratio, "dt": dt},
    )


def g_zero_fidelities(n_max: int = 10):
    cut = FockCutoff(n_max)
    out = []
    cases = [
        (BranchSpec(1.0, 0.0, 0.5), 0.5, 0.5, 2 * math.pi),
        (BranchSpec.from_probability(0.7, 0.4 + 0.3j), 0.5, 0.5, 1.3),
        (BranchSpec(0.6, 0.8j, 0.5), 0.3, 1.7, 0.9),
    ]
    for spec, omega, nu, t in cases:
        H = build_operators(ModelParams(omega, nu, 0.0, 0.0), cut).H
        psi0 = initial_state(spec, cut)
        out.append(fidelity(solution_g_zero(spec, omega, nu, t, cut), propagate(H, psi0, t)))
    return out


def g_dominated_fidelities(n_max: int = 30):
    cut = FockCutoff(n_max)
    out = []
    for spec, g, t in [
        (BranchSpec.equal(1.0), 1.0, 1.0),
        (BranchSpec.from_probability(0.7, 1.0), 1.0, 0.5),
        (BranchSpec(0.6, 0.8j, 1.0), -0.8, 1.0),
    ]:
        H = build_operators(ModelParams(0.0, 0.0, g, 0.0), cut).H
        psi0 = initial_state(spec, cut)
        out.append(fidelity(solution_g_dominated(spec, g, t, cut), propagate(H, psi0, t)))
    return out


def decay_fidelities(n_max: int = 30):
    """Closed-form decay against DOP853 integration of d psi/dt = -lam^2 n psi."""
    cut = FockCutoff(n_max)
    levels = np.arange(cut.levels)
    out = []
    for comps, lam, t in [
        ([(1.0, 2.0)], 0.2, 5.0),
        ([(1 / math.sqrt(2), 2.0), (1 / math.sqrt(2), -2.0)], 0.2, 5.0),
        ([(0.6, 2.0j), (0.8, -2.0)], 0.5, 1.5),
    ]:
        sol = decay_solution(comps, lam, t, cut)
        psi0 = decay_solution(comps, lam, 0.0, cut).field

        def rhs(_t, y):
            z = y[: cut.levels] + 1j * y[cut.levels:]
            dz = -lam * lam * levels * z
            return np.concatenate([dz.real, dz.imag])

        ivp = solve_ivp(rhs, (0.0, t), np.concatenate([psi0.real, psi0.imag]),
                        rtol=1e-12, atol=1e-14, method="DOP853")
        num = ivp.y[: cut.levels, -1] + 1j * ivp.y[cut.levels:, -1]
        f = abs(np.vdot(sol.field, num)) ** 2 / (np.vdot(sol.field, sol.field).real
                                                  * np.vdot(num, num).real)
        out.append(float(f))
    return out


def _fid_check(name, fids):
    worst = min(fids)
    return CheckResult(name, 1.0 - worst, FIDELITY_TOL, bool(1.0 - worst <= FIDELITY_TOL),
                       {"fidelities": fids})


def run_all(include_integrator: bool = True):
    results = [
        _fid_check("solution_g_zero", g_zero_fidelities()),
        _fid_check("solution_g_dominated", g_dominated_fidelities()),
        _fid_check("decay_solution", decay_fidelities()),
    ]
    if include_integrator:
        results.append(check_schrodinger_limit())
    return results
