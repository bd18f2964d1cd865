import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qreduce.errors import CutoffTooSmall, DimensionMismatch, NormDriftWarning
from qreduce.hilbert import (
    FockCutoff,
    ModelParams,
    build_operators,
    coherent_state,
    compose,
    current_eigenstate,
    observables,
    spin_field,
)
from qreduce.analytic import BranchSpec, solution_g_dominated
from qreduce.experiment import initial_state


def basis(cut, s, n):
    v = np.zeros(cut.dim, dtype=complex)
    v[s * cut.levels + n] = 1.0
    return v


@pytest.fixture(scope="module")
def ops15():
    return build_operators(ModelParams(0.7, 0.3, 1.1, 0.2), FockCutoff(15))


def test_cutoff_dimension():
    assert FockCutoff(7).dim == 16
    with pytest.raises(ValueError):
        FockCutoff(0)


def test_auto_cutoff_covers_displaced_state():
    cut = FockCutoff.auto(4, 4.0, 3.0)
    beta = 16.0
    assert cut.n_max == math.ceil(beta ** 2 + 6 * beta + 10)
    coherent_state(beta, cut, tol=1e-8)  # within the run-time truncation tolerance


def test_model_params_reject_negative_lambda():
    with pytest.raises(ValueError):
        ModelParams(0, 0, 1, -0.1)
    with pytest.raises(ValueError):
        ModelParams(float("nan"), 0, 1, 0.1)


def test_annihilation_lowers_photon_number():
    cut = FockCutoff(5)
    ops = build_operators(ModelParams(0, 0, 0, 0), cut)
    out = ops.a @ basis(cut, 0, 1)
    np.testing.assert_allclose(out, basis(cut, 0, 0), atol=1e-15)


def test_number_operator_eigenstate():
    cut = FockCutoff(5)
    ops = build_operators(ModelParams(0, 0, 0, 0), cut)
    v = basis(cut, 1, 3)
    np.testing.assert_allclose(ops.a_dagger @ (ops.a @ v), 3 * v, atol=1e-14)


def test_hamiltonian_diagonal_case():
    cut = FockCutoff(5)
    ops = build_operators(ModelParams(0.5, 0.5, 0.0, 0.0), cut)
    v = basis(cut, 0, 2)
    np.testing.assert_allclose(ops.H @ v, 1.25 * v, atol=1e-14)


def test_hermiticity(ops15):
    H = ops15.H.toarray()
    assert np.array_equal(H, H.conj().T)
    assert np.array_equal(ops15.a_dagger.toarray(), ops15.a.toarray().conj().T)


def test_commutator_on_interior(ops15):
    a, ad = ops15.a.toarray(), ops15.a_dagger.toarray()
    comm = a @ ad - ad @ a
    n = ops15.cutoff.levels
    idx = [s * n + k for s in (0, 1) for k in range(n - 1)]
    np.testing.assert_allclose(comm[np.ix_(idx, idx)], np.eye(len(idx)), atol=1e-13)


def test_coherent_vacuum():
    v = coherent_state(0, FockCutoff(4))
    np.testing.assert_array_equal(v, [1, 0, 0, 0, 0])


def test_coherent_mean_photon_number():
    cut = FockCutoff(40)
    v = coherent_state(2.0, cut)
    n = np.arange(cut.levels)
    assert np.sum(n * abs(v) ** 2) == pytest.approx(4.0, abs=1e-8)


def test_coherent_overlap_example():
    cut = FockCutoff(40)
    ov = abs(np.vdot(coherent_state(1, cut), coherent_state(-1, cut)))
    assert ov == pytest.approx(math.exp(-2), abs=1e-8)


def test_coherent_cutoff_too_small():
    with pytest.raises(CutoffTooSmall):
        coherent_state(4.0, FockCutoff(20))


@settings(max_examples=40, deadline=None)
@given(
    st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False),
)
def test_coherent_overlap_law(a, b):
    cut = FockCutoff(60)
    ov = abs(np.vdot(coherent_state(a, cut), coherent_state(b, cut)))
    assert ov == pytest.approx(math.exp(-abs(a - b) ** 2 / 2), abs=1e-6)


@pytest.mark.parametrize("sign", [1, -1])
def test_current_eigenstates(sign):
    v = current_eigenstate(sign)
    sx = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(sx @ v, sign * v)
    assert np.vdot(v, sx @ v).real == pytest.approx(sign)


def test_current_eigenstate_rejects_zero():
    with pytest.raises(ValueError):
        current_eigenstate(0)


def test_equal_current_superposition_has_zero_current():
    cut = FockCutoff(30)
    ops = build_operators(ModelParams(0, 0, 0, 0), cut)
    psi = initial_state(BranchSpec.equal(0.5), cut)
    assert observables(psi, ops).sx_mean == pytest.approx(0.0, abs=1e-15)


def test_compose_basis_state():
    cut = FockCutoff(3)
    psi = compose([1, 0], coherent_state(0, cut))
    np.testing.assert_array_equal(psi, basis(cut, 0, 0))


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compose([1, 0, 0], [1, 0])
    with pytest.raises(DimensionMismatch):
        compose([1, 0], np.eye(2))


def test_product_state_has_zero_field_variance():
    cut = FockCutoff(60)
    ops = build_operators(ModelParams(0, 0, 1, 0), cut)
    psi = compose(current_eigenstate(1), coherent_state(2 - 1j, cut))
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    obs = observables(psi, ops)
    assert obs.var_a == pytest.approx(0.0, abs=1e-8)


def test_observables_product_eigenstate():
    cut = FockCutoff.auto(4)
    ops = build_operators(ModelParams(0, 0, 1, 0), cut)
    obs = observables(compose(current_eigenstate(1), coherent_state(4, cut)), ops)
    assert obs.a_mean == pytest.approx(4.0, abs=1e-8)
    assert obs.var_a == pytest.approx(0.0, abs=1e-8)
    assert obs.sx_mean == pytest.approx(1.0, abs=1e-12)
    assert obs.cov_current_field == pytest.approx(0.0, abs=1e-8)


def test_observables_equal_superposition():
    cut = FockCutoff.auto(4)
    ops = build_operators(ModelParams(0, 0, 1, 0), cut)
    obs = observables(initial_state(BranchSpec.equal(4), cut), ops)
    assert obs.sx_mean == pytest.approx(0.0, abs=1e-12)
    assert obs.a_mean == pytest.approx(4.0, abs=1e-8)


def test_observables_g_dominated_covariance():
    # -8 g t p1 p2 with gt = 1.5 and p1 = p2 = 1/2
    cut = FockCutoff.auto(4, 1.0, 1.5)
    ops = build_operators(ModelParams(0, 0, 1, 0), cut)
    psi = solution_g_dominated(BranchSpec.equal(4), 1.0, 1.5, cut)
    assert observables(psi, ops).cov_current_field == pytest.approx(-3.0, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_variance_bounds_random_states(seed):
    cut = FockCutoff(12)
    ops = build_operators(ModelParams(0.3, 0.2, 0.5, 0.1), cut)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=cut.dim) + 1j * rng.normal(size=cut.dim)
    psi /= np.linalg.norm(psi)
    obs = observables(psi, ops)
    assert obs.var_a >= abs(obs.delta_a_sq) - 1e-10
    assert abs(obs.sx_mean) <= 1 + 1e-12


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from([1, -1]),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
)
def test_current_field_covariance_vanishes_on_products(sign, alpha):
    cut = FockCutoff(60)
    ops = build_operators(ModelParams(0, 0, 1, 0), cut)
    obs = observables(compose(current_eigenstate(sign), coherent_state(alpha, cut)), ops)
    assert obs.cov_current_field == pytest.approx(0.0, abs=1e-8)
    assert obs.var_a == pytest.approx(0.0, abs=1e-8)


def test_variance_positive_for_field_superposition():
    cut = FockCutoff(40)
    ops = build_operators(ModelParams(0, 0, 0, 0), cut)
    field = coherent_state(2, cut) + coherent_state(-2, cut)
    obs = observables(compose([1, 0], field), ops)
    assert obs.var_a > 1.0


def test_norm_drift_warning():
    cut = FockCutoff(5)
    ops = build_operators(ModelParams(0, 0, 0, 0), cut)
    psi = 1.01 * basis(cut, 0, 1)
    with pytest.warns(NormDriftWarning):
        observables(psi, ops)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        observables(basis(cut, 0, 1), ops)


def test_spin_field_view():
    cut = FockCutoff(3)
    sf = spin_field(basis(cut, 1, 2))
    assert sf.shape == (2, 4)
    assert sf[1, 2] == 1
