"""Hot loops for the spin-boson state update.

The state is held as a ``(2, N)`` complex array: row 0 is the sigma_z = +1
spin component, row 1 the sigma_z = -1 component, columns are photon numbers
0..N-1.  Operators are applied through their banded structure, never as
matrices.

Every kernel exists twice: a numba ``@njit`` loop version and a vectorized
numpy version.  ``advance`` and ``moments`` point at the numba pair unless
numba is missing or ``QREDUCE_DISABLE_NUMBA`` is set.

``advance`` never rescales the state.  The drift and diffusion coefficients
use the normalized expectation ``<a> = <psi|a|psi>/<psi|psi>`` so the
un-normalized iterate is the per-step-renormalized one times a scalar; the
caller rescales at block boundaries.
"""
import numpy as np

from ._jit import JIT_KWARGS, USE_NUMBA, njit

OK = 0
NONFINITE = 1
TRUNCATED = 2

# amplitudes whose squared modulus falls below this (relative to the norm)
# at the top of the support are zeroed, keeping the working window tight
SUPPORT_EPS = 1e-300

TOP_LEVELS = 5


def sqrt_levels(n_levels):
    """sqrt(n) for n = 0..n_levels (one past the top level)."""
    return np.sqrt(np.arange(n_levels + 1, dtype=np.float64))


# ---------------------------------------------------------------------------
# numba versions
# ---------------------------------------------------------------------------


@njit(**JIT_KWARGS)
def _support_top_nb(psi, hi, norm2):
    thr = SUPPORT_EPS * norm2
    while hi > 0:
        m = (psi[0, hi].real ** 2 + psi[0, hi].imag ** 2
             + psi[1, hi].real ** 2 + psi[1, hi].imag ** 2)
        if m >= thr:
            break
        psi[0, hi] = 0.0
        psi[1, hi] = 0.0
        hi -= 1
    return hi


@njit(**JIT_KWARGS)
def _advance_nb(psi, hi, dB, dt, omega, nu, g, lam, sq, trunc_tol):
    n_levels = psi.shape[1]
    lam2 = lam * lam

    norm2 = 0.0
    acc = 0.0 + 0.0j
    for n in range(hi + 1):
        norm2 += (psi[0, n].real ** 2 + psi[0, n].imag ** 2
                  + psi[1, n].real ** 2 + psi[1, n].imag ** 2)
        if n + 1 < n_levels:
            acc += sq[n + 1] * (np.conj(psi[0, n]) * psi[0, n + 1]
                                + np.conj(psi[1, n]) * psi[1, n + 1])
    hi = _support_top_nb(psi, hi, norm2)

    drift_sum = 0.0
    drift_max = 0.0
    trunc_max = 0.0
    status = OK
    steps = 0
    hz = 0.5j * dt * nu
    ig = 1j * dt * g
    top_start = n_levels - TOP_LEVELS

    for k in range(dB.shape[0]):
        db = dB[k]
        at = acc / norm2
        atc = np.conj(at)
        c0 = (1.0 - 0.5 * lam2 * (at.real ** 2 + at.imag ** 2) * dt
              - 0.5 * lam * at * db - 0.5 * lam * atc * np.conj(db))
        ca = lam2 * atc * dt + lam * db

        hi_new = hi + 1
        if hi_new > n_levels - 1:
            hi_new = n_levels - 1

        prev0 = 0.0 + 0.0j
        prev1 = 0.0 + 0.0j
        q0_prev = 0.0 + 0.0j
        q1_prev = 0.0 + 0.0j
        nrm = 0.0
        acc = 0.0 + 0.0j
        top = 0.0
        for n in range(hi_new + 1):
            p0 = psi[0, n]
            p1 = psi[1, n]
            if n + 1 < n_levels:
                u0 = psi[0, n + 1]
                u1 = psi[1, n + 1]
            else:
                u0 = 0.0 + 0.0j
                u1 = 0.0 + 0.0j
            s_up = sq[n + 1]
            s_dn = sq[n]
            diag = c0 - (lam2 * dt) * n - (1j * dt * omega) * n
            q0 = p0 * (diag - hz) + ca * s_up * u0 - ig * (s_up * u1 + s_dn * prev1)
            q1 = p1 * (diag + hz) + ca * s_up * u1 - ig * (s_up * u0 + s_dn * prev0)
            prev0 = p0
            prev1 = p1
            psi[0, n] = q0
            psi[1, n] = q1
            m = q0.real ** 2 + q0.imag ** 2 + q1.real ** 2 + q1.imag ** 2
            nrm += m
            if n >= top_start:
                top += m
            if n > 0:
                acc += s_dn * (np.conj(q0_prev) * q0 + np.conj(q1_prev) * q1)
            q0_prev = q0
            q1_prev = q1

        steps = k + 1
        hi = hi_new
        if not np.isfinite(nrm) or nrm <= 0.0:
            status = NONFINITE
            break
        drift = nrm / norm2 - 1.0
        drift_sum += drift
        if abs(drift) > drift_max:
            drift_max = abs(drift)
        norm2 = nrm
        occ = top / nrm
        if occ > trunc_max:
            trunc_max = occ
        if occ > trunc_tol:
            status = TRUNCATED
            break

    return hi, norm2, steps, drift_sum, drift_max, trunc_max, status


@njit(**JIT_KWARGS)
def _moments_nb(psi, hi, sq):
    n_levels = psi.shape[1]
    norm2 = 0.0
    a = 0.0 + 0.0j
    num = 0.0
    a2 = 0.0 + 0.0j
    sx = 0.0
    sxa = 0.0 + 0.0j
    sz = 0.0
    top = 0.0
    for n in range(hi + 1):
        p0 = psi[0, n]
        p1 = psi[1, n]
        m0 = p0.real ** 2 + p0.imag ** 2
        m1 = p1.real ** 2 + p1.imag ** 2
        norm2 += m0 + m1
        num += n * (m0 + m1)
        sz += m0 - m1
        sx += 2.0 * (np.conj(p0) * p1).real
        if n >= n_levels - TOP_LEVELS:
            top += m0 + m1
        if n + 1 < n_levels:
            u0 = psi[0, n + 1]
            u1 = psi[1, n + 1]
            a += sq[n + 1] * (np.conj(p0) * u0 + np.conj(p1) * u1)
            sxa += sq[n + 1] * (np.conj(p0) * u1 + np.conj(p1) * u0)
        if n + 2 < n_levels:
            a2 += sq[n + 1] * sq[n + 2] * (np.conj(p0) * psi[0, n + 2]
                                           + np.conj(p1) * psi[1, n + 2])
    return norm2, a, num, a2, sx, sxa, sz, top


# ---------------------------------------------------------------------------
# numpy versions
# ---------------------------------------------------------------------------


def _support_top_np(psi, hi, norm2):
    mag = np.abs(psi[0, : hi + 1]) ** 2 + np.abs(psi[1, : hi + 1]) ** 2
    keep = np.nonzero(mag >= SUPPORT_EPS * norm2)[0]
    new_hi = int(keep[-1]) if keep.size else 0
    psi[:, new_hi + 1 : hi + 1] = 0.0
    return new_hi


def _advance_np(psi, hi, dB, dt, omega, nu, g, lam, sq, trunc_tol):
    n_levels = psi.shape[1]
    lam2 = lam * lam
    levels = np.arange(n_levels, dtype=np.float64)

    norm2 = float(np.sum(np.abs(psi[:, : hi + 1]) ** 2))
    # padded copy: column j holds level j-1, with zero guards at both ends
    work = np.zeros((2, n_levels + 2), dtype=np.complex128)
    work[:, 1 : n_levels + 1] = psi
    hi = _support_top_np(work[:, 1 : n_levels + 1], hi, norm2)
    cur = work[:, 1 : hi + 2]
    acc = complex(np.sum(sq[1 : hi + 1] * np.sum(np.conj(cur[:, :-1]) * cur[:, 1:], axis=0)))

    drift_sum = 0.0
    drift_max = 0.0
    trunc_max = 0.0
    status = OK
    steps = 0
    hz = np.array([[-0.5j * dt * nu], [0.5j * dt * nu]])
    ig = 1j * dt * g
    top_start = n_levels - TOP_LEVELS

    for k in range(dB.shape[0]):
        db = complex(dB[k])
        at = acc / norm2
        atc = at.conjugate()
        c0 = (1.0 - 0.5 * lam2 * abs(at) ** 2 * dt
              - 0.5 * lam * at * db - 0.5 * lam * atc * db.conjugate())
        ca = lam2 * atc * dt + lam * db

        hi = min(hi + 1, n_levels - 1)
        m = hi + 1
        cur = work[:, 1 : m + 1]
        up = work[:, 2 : m + 2]
        dn = work[:, 0:m]
        s_up = sq[1 : m + 1]
        s_dn = sq[0:m]
        diag = c0 - (lam2 * dt) * levels[:m] - (1j * dt * omega) * levels[:m]
        new = (cur * (diag + hz) + ca * s_up * up
               - ig * (s_up * up[::-1] + s_dn * dn[::-1]))
        work[:, 1 : m + 1] = new

        mag = np.abs(new) ** 2
        nrm = float(np.sum(mag))
        top = float(np.sum(mag[:, top_start:])) if m > top_start else 0.0
        acc = complex(np.sum(s_dn[1:] * np.sum(np.conj(new[:, :-1]) * new[:, 1:], axis=0)))

        steps = k + 1
        if not np.isfinite(nrm) or nrm <= 0.0:
            status = NONFINITE
            break
        drift = nrm / norm2 - 1.0
        drift_sum += drift
        drift_max = max(drift_max, abs(drift))
        norm2 = nrm
        occ = top / nrm
        trunc_max = max(trunc_max, occ)
        if occ > trunc_tol:
            status = TRUNCATED
            break

    psi[:, :] = work[:, 1 : n_levels + 1]
    return hi, norm2, steps, drift_sum, drift_max, trunc_max, status


def _moments_np(psi, hi, sq):
    n_levels = psi.shape[1]
    p = psi[:, : hi + 1]
    mag = np.abs(p) ** 2
    levels = np.arange(hi + 1)
    norm2 = float(np.sum(mag))
    num = float(np.sum(levels * mag))
    sz = float(np.sum(mag[0]) - np.sum(mag[1]))
    sx = float(2.0 * np.sum(np.conj(p[0]) * p[1]).real)
    top = float(np.sum(mag[:, n_levels - TOP_LEVELS :])) if hi >= n_levels - TOP_LEVELS else 0.0
    m = min(hi + 2, n_levels)
    q = psi[:, :m]
    a = complex(np.sum(sq[1:m] * (np.conj(q[:, :-1]) * q[:, 1:]).sum(axis=0)))
    sxa = complex(np.sum(sq[1:m] * (np.conj(q[:, :-1]) * q[::-1, 1:]).sum(axis=0)))
    m2 = min(hi + 3, n_levels)
    r = psi[:, :m2]
    a2 = complex(np.sum(sq[1 : m2 - 1] * sq[2:m2] * (np.conj(r[:, :-2]) * r[:, 2:]).sum(axis=0)))
    return norm2, a, num, a2, sx, sxa, sz, top


if USE_NUMBA:
    BACKEND = "numba"
    advance = _advance_nb
    moments = _moments_nb
else:
    BACKEND = "numpy"
    advance = _advance_np
    moments = _moments_np

BACKENDS = {
    "numba": (_advance_nb, _moments_nb),
    "numpy": (_advance_np, _moments_np),
}
