"""The numba and numpy kernels against each other and against the sparse
reference step."""
import numpy as np
import pytest

from qreduce import kernels
from qreduce.analytic import BranchSpec
from qreduce.experiment import initial_state
from qreduce.hilbert import FockCutoff, ModelParams, build_operators, observables, spin_field
from qreduce.sde import NoiseIncrement, RngStream, em_step

PARAMS = ModelParams(0.5, 0.5, 4.0, 0.2)


@pytest.fixture(scope="module")
def setup():
    cut = FockCutoff(60)
    psi0 = initial_state(BranchSpec(0.6, 0.8j, 1.5 - 0.5j), cut)
    return cut, psi0


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_advance_matches_sparse_steps(setup, backend):
    cut, psi0 = setup
    advance, _ = kernels.BACKENDS[backend]
    ops = build_operators(PARAMS, cut)
    dt = 1e-3
    dB = RngStream(5, 1).increments(40, dt)

    ref = psi0.copy()
    for db in dB:
        ref = em_step(ref, PARAMS, ops, dt, NoiseIncrement(db))

    sf = spin_field(psi0).copy()
    hi, norm2, steps, *_ = advance(sf, cut.n_max, dB, dt, PARAMS.omega, PARAMS.nu,
                                   PARAMS.g, PARAMS.lam, kernels.sqrt_levels(cut.levels), 1.0)
    assert steps == 40
    out = sf.reshape(-1) / np.sqrt(norm2)
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_backends_agree_on_moments(setup):
    cut, psi0 = setup
    sq = kernels.sqrt_levels(cut.levels)
    a = kernels.BACKENDS["numba"][1](spin_field(psi0), cut.n_max, sq)
    b = kernels.BACKENDS["numpy"][1](spin_field(psi0), cut.n_max, sq)
    np.testing.assert_allclose(np.array(a, dtype=complex), np.array(b, dtype=complex),
                               rtol=1e-12, atol=1e-14)


def test_moments_match_sparse_observables(setup):
    cut, psi0 = setup
    ops = build_operators(PARAMS, cut)
    obs = observables(psi0, ops)
    norm2, a, num, a2, sx, sxa, sz, top = kernels.moments(spin_field(psi0), cut.n_max,
                                                          kernels.sqrt_levels(cut.levels))
    assert norm2 == pytest.approx(1.0, abs=1e-12)
    assert a == pytest.approx(obs.a_mean, abs=1e-12)
    assert num - abs(a) ** 2 == pytest.approx(obs.var_a, abs=1e-11)
    assert a2 - a * a == pytest.approx(obs.delta_a_sq, abs=1e-11)
    assert sx == pytest.approx(obs.sx_mean, abs=1e-12)
    assert 2 * sxa.imag - 2 * sx * a.imag == pytest.approx(obs.cov_current_field, abs=1e-11)
    energy = PARAMS.omega * num + 0.5 * PARAMS.nu * sz + 2 * PARAMS.g * sxa.real
    assert energy == pytest.approx(obs.energy, abs=1e-11)


def test_support_window_is_exact():
    # a state living on the lowest levels must evolve identically whether the
    # kernel starts from a tight window or the full cutoff
    cut = FockCutoff(80)
    psi0 = initial_state(BranchSpec.equal(0.5), cut)
    sf_full = spin_field(psi0).copy()
    sf_tight = spin_field(psi0).copy()
    dB = RngStream(2, 0).increments(200, 1e-3)
    args = (1e-3, 0.5, 0.5, 4.0, 0.2, kernels.sqrt_levels(cut.levels), 1.0)
    kernels.advance(sf_full, cut.n_max, dB, *args)
    hi0 = int(np.nonzero(np.abs(sf_tight[0]) > 1e-150)[0][-1])
    sf_tight[:, hi0 + 1:] = 0
    kernels.advance(sf_tight, hi0, dB, *args)
    np.testing.assert_allclose(sf_full, sf_tight, atol=1e-14)


def test_nonfinite_status():
    cut = FockCutoff(20)
    sf = spin_field(initial_state(BranchSpec.equal(1.0), cut)).copy()
    dB = np.zeros(50, dtype=complex)
    out = kernels.advance(sf, cut.n_max, dB, 1e3, 1e3, 0, 1e3, 0, kernels.sqrt_levels(cut.levels), 1.0)
    assert out[-1] == kernels.NONFINITE


def test_truncation_status():
    cut = FockCutoff(12)
    sf = spin_field(initial_state(BranchSpec.equal(1.0), cut)).copy()
    dB = np.zeros(5000, dtype=complex)
    out = kernels.advance(sf, cut.n_max, dB, 1e-3, 0, 0, 4.0, 0, kernels.sqrt_levels(cut.levels), 1e-8)
    assert out[-1] == kernels.TRUNCATED
    assert out[2] < 5000


def test_env_flag_selects_numpy_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, QREDUCE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from qreduce import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
