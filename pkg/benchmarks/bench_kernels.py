"""Time the numba and numpy step kernels on the same blocks of steps.

    python benchmarks/bench_kernels.py [--steps 2000] [--repeat 5]

Also times one full path (omega = nu = 0.5, g = 4, lambda = 0.2) with whichever backend
the package picked (``QREDUCE_DISABLE_NUMBA=1`` selects numpy).
"""
import argparse
import time

import numpy as np

from qreduce import kernels
from qreduce.analytic import BranchSpec
from qreduce.experiment import ExperimentSpec, initial_state, run_trajectory
from qreduce.hilbert import FockCutoff, ModelParams, spin_field
from qreduce.sde import RngStream


def time_advance(advance, n_max, hi, steps, repeat, params):
    cut = FockCutoff(n_max)
    sq = kernels.sqrt_levels(cut.levels)
    psi0 = spin_field(initial_state(BranchSpec.equal(4), cut)).copy()
    dB = RngStream(0).increments(steps, 1e-4)
    best = np.inf
    for _ in range(repeat):
        psi = psi0.copy()
        t0 = time.perf_counter()
        advance(psi, hi, dB, 1e-4, params.omega, params.nu, params.g, params.lam, sq, 1e-8)
        best = min(best, time.perf_counter() - t0)
    return best / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    params = ModelParams(0.5, 0.5, 4.0, 0.2)
    print(f"default backend: {kernels.BACKEND}")
    print(f"{'n_max':>6} {'window':>6} {'numba us/step':>14} {'numpy us/step':>14} {'speedup':>8}")
    for n_max, hi in [(60, 60), (150, 60), (150, 150), (400, 400)]:
        row = {}
        for name in ("numba", "numpy"):
            advance = kernels.BACKENDS[name][0]
            advance(spin_field(initial_state(BranchSpec.equal(1), FockCutoff(20))).copy(), 20,
                    np.zeros(2, complex), 1e-4, 0.5, 0.5, 4.0, 0.2,
                    kernels.sqrt_levels(21), 1e-8)  # warm up / compile
            row[name] = time_advance(advance, n_max, hi, args.steps, args.repeat, params) * 1e6
        print(f"{n_max:>6} {hi:>6} {row['numba']:>14.2f} {row['numpy']:>14.2f} "
              f"{row['numpy'] / row['numba']:>7.1f}x")

    spec = ExperimentSpec(params, BranchSpec.equal(4), t_max=3.0, seed=1)
    run_trajectory(spec.replace(t_max=0.01))
    t0 = time.perf_counter()
    run_trajectory(spec)
    print(f"one 30000-step path (n_max={spec.fock.n_max}, backend {kernels.BACKEND}): "
          f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
