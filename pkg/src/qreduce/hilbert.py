"""Spin (x) truncated Fock space: operators, states and expectation values.

Basis ordering is spin-major: index ``s * (n_max + 1) + n`` with ``s = 0``
for sigma_z = +1 and ``s = 1`` for sigma_z = -1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CutoffTooSmall, DimensionMismatch, NormDriftWarning

TRUNCATION_TOL = 1e-10
NORM_WARN_TOL = 1e-6


@dataclass(frozen=True)
class FockCutoff:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def levels(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    @classmethod
    def auto(cls, alpha: complex, g: float = 0.0, t_max: float = 0.0) -> "FockCutoff":
        """Cutoff with >= 6 sigma Poisson headroom for the largest displaced
        coherent amplitude |alpha| + |g| t_max reached in a run."""
        beta = abs(alpha) + abs(g) * t_max
        return cls(max(1, math.ceil(beta * beta + 6.0 * beta + 10.0)))


@dataclass(frozen=True)
class ModelParams:
    omega: float
    nu: float
    g: float
    lam: float

    def __post_init__(self):
        for name in ("omega", "nu", "g", "lam"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    def replace(self, **kw) -> "ModelParams":
        d = dict(omega=self.omega, nu=self.nu, g=self.g, lam=self.lam)
        d.update(kw)
        return ModelParams(**d)


@dataclass(frozen=True)
class Operators:
    """Model operators as sparse CSR matrices over the composite basis."""

    a: sparse.csr_matrix
    a_dagger: sparse.csr_matrix
    sigma_x: sparse.csr_matrix
    sigma_z: sparse.csr_matrix
    number: sparse.csr_matrix
    H: sparse.csr_matrix
    cutoff: FockCutoff

    @property
    def dim(self) -> int:
        return self.cutoff.dim


_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def field_annihilation(cutoff: FockCutoff) -> sparse.csr_matrix:
    n = np.arange(1, cutoff.levels)
    return sparse.diags(np.sqrt(n).astype(complex), 1, format="csr")


def build_operators(params: ModelParams, cutoff: FockCutoff) -> Operators:
    """Build a, a^dagger, sigma_x, sigma_z and
    H = omega a^dag a + nu/2 sigma_z + g sigma_x (a + a^dag)."""
    eye_f = sparse.identity(cutoff.levels, dtype=complex, format="csr")
    eye_s = sparse.identity(2, dtype=complex, format="csr")
    af = field_annihilation(cutoff)
    a = sparse.kron(eye_s, af, format="csr")
    ad = a.conj().T.tocsr()
    sx = sparse.kron(sparse.csr_matrix(_SX), eye_f, format="csr")
    sz = sparse.kron(sparse.csr_matrix(_SZ), eye_f, format="csr")
    num = (ad @ a).tocsr()
    H = (params.omega * num + 0.5 * params.nu * sz + params.g * (sx @ (a + ad))).tocsr()
    return Operators(a=a, a_dagger=ad, sigma_x=sx, sigma_z=sz, number=num, H=H, cutoff=cutoff)


def poisson_tail(alpha: complex, n_max: int) -> float:
    """Probability mass of a coherent state above photon number n_max."""
    return float(poisson.sf(n_max, abs(alpha) ** 2))


def coherent_state(alpha: complex, cutoff: FockCutoff, tol: float = TRUNCATION_TOL) -> np.ndarray:
    """Truncated coherent state |alpha>, renormalized on the retained levels.

    Raises CutoffTooSmall when the Poisson tail beyond ``n_max`` exceeds ``tol``.
    """
    alpha = complex(alpha)
    tail = poisson_tail(alpha, cutoff.n_max)
    if tail > tol:
        raise CutoffTooSmall(
            f"|alpha|={abs(alpha):.4g} leaves tail mass {tail:.3g} above n_max={cutoff.n_max}"
        )
    out = np.zeros(cutoff.levels, dtype=complex)
    r = abs(alpha)
    if r == 0.0:
        out[0] = 1.0
        return out
    n = np.arange(cutoff.levels)
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    out = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return out / np.linalg.norm(out)


def current_eigenstate(sign: int) -> np.ndarray:
    """Normalized sigma_x eigenvector (1, sign)/sqrt(2)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return np.array([1.0, sign], dtype=complex) / math.sqrt(2.0)


def compose(spin, field) -> np.ndarray:
    """Product state spin (x) field, spin-major."""
    spin = np.asarray(spin, dtype=complex)
    field = np.asarray(field, dtype=complex)
    if spin.shape != (2,) or field.ndim != 1 or field.size < 2:
        raise DimensionMismatch(f"spin {spin.shape} / field {field.shape}")
    psi = np.kron(spin, field)
    return psi / np.linalg.norm(psi)


def spin_field(state: np.ndarray) -> np.ndarray:
    """(2, n_max+1) view of a composite state vector."""
    state = np.asarray(state)
    if state.ndim != 1 or state.size % 2:
        raise DimensionMismatch(f"state shape {state.shape}")
    return state.reshape(2, -1)


def fidelity(psi, phi) -> float:
    """|<psi|phi>|^2 for unit vectors."""
    return float(abs(np.vdot(psi, phi)) ** 2)


@dataclass(frozen=True)
class ObservableSet:
    a_mean: complex
    var_a: float
    delta_a_sq: complex
    sx_mean: float
    cov_current_field: float
    energy: float
    norm: float


def observables(state: np.ndarray, ops: Operators) -> ObservableSet:
    """Conditional moments of a state.

    ``var_a = <a^dag a> - |<a>|^2``, ``delta_a_sq = <a^2> - <a>^2`` and
    ``cov_current_field = Cov(sigma_x, -i(a - a^dag))``.
    """
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (ops.dim,):
        raise DimensionMismatch(f"state of size {psi.size} for dimension {ops.dim}")
    norm2 = float(np.vdot(psi, psi).real)
    norm = math.sqrt(norm2)
    if abs(norm - 1.0) > NORM_WARN_TOL:
        warnings.warn(f"state norm {norm:.9g} differs from 1", NormDriftWarning, stacklevel=2)

    def ev(op, vec=psi):
        return complex(np.vdot(psi, op @ vec)) / norm2

    a_psi = ops.a @ psi
    a = complex(np.vdot(psi, a_psi)) / norm2
    n = complex(np.vdot(a_psi, a_psi)).real / norm2
    a2 = ev(ops.a, a_psi)
    sx = ev(ops.sigma_x).real
    x = ops.a - ops.a_dagger
    cov = (-1j * ev(ops.sigma_x @ x) + 1j * sx * ev(x)).real
    return ObservableSet(
        a_mean=a,
        var_a=max(n - abs(a) ** 2, 0.0),
        delta_a_sq=a2 - a * a,
        sx_mean=sx,
        cov_current_field=cov,
        energy=ev(ops.H).real,
        norm=norm,
    )


def top_occupancy(state: np.ndarray, levels: int = 5) -> float:
    """Population in the highest ``levels`` Fock levels."""
    sf = spin_field(state)
    return float(np.sum(np.abs(sf[:, -levels:]) ** 2) / np.sum(np.abs(sf) ** 2))
