"""Complex Wiener noise and the Euler-Maruyama integrator for

    d|psi> = {(-iH - lam^2 a^dag a + lam^2 <a>^* a - lam^2 |<a>|^2 / 2) dt
              + lam (a - <a>/2) dB - lam <a>^* dB^* / 2} |psi>

with dB dB^* = 2 dt and dB dB = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CutoffExceeded, NonFiniteAmplitude
from .hilbert import ModelParams, ObservableSet, Operators, spin_field

DEFAULT_DT = 1e-4
DEFAULT_SAMPLE_INTERVAL = 1e-2
TOP_LEVEL_TOL = 1e-8


@dataclass(frozen=True)
class NoiseIncrement:
    dB: complex

    @classmethod
    def from_normals(cls, xi1: float, xi2: float, dt: float) -> "NoiseIncrement":
        s = math.sqrt(dt)
        return cls(complex(xi1 * s, xi2 * s))


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = DEFAULT_DT
    renormalize_each_step: bool = True
    sample_interval: float = DEFAULT_SAMPLE_INTERVAL
    # max population allowed in the top 5 Fock levels; None disables the monitor
    truncation_tolerance: float | None = TOP_LEVEL_TOL

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.sample_interval < self.dt * (1 - 1e-9):
            raise ValueError("sample_interval must be >= dt")
        k = round(self.sample_interval / self.dt)
        if abs(k * self.dt - self.sample_interval) > 1e-9 * self.sample_interval:
            raise ValueError("sample_interval must be an integer multiple of dt")

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_interval / self.dt))

    @property
    def trunc_tol(self) -> float:
        return math.inf if self.truncation_tolerance is None else float(self.truncation_tolerance)


class RngStream:
    """Reproducible normal stream keyed by ``(seed, path_index)``.

    Backed by a Philox (counter-based) bit generator seeded from
    ``SeedSequence([seed, path_index])``, so a path's noise never depends on
    which worker runs it or in what order.
    """

    def __init__(self, seed: int, path_index: int = 0):
        if seed < 0 or path_index < 0:
            raise ValueError("seed and path_index must be non-negative")
        self.seed = int(seed)
        self.path_index = int(path_index)
        ss = np.random.SeedSequence([self.seed, self.path_index])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def normals(self, k: int) -> np.ndarray:
        """``(k, 2)`` standard normals: one (xi1, xi2) pair per step."""
        return self._gen.standard_normal((k, 2))

    def increments(self, k: int, dt: float) -> np.ndarray:
        xi = self.normals(k)
        s = math.sqrt(dt)
        return s * xi[:, 0] + 1j * s * xi[:, 1]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path_index={self.path_index})"


def sample_noise(rng: RngStream, dt: float) -> NoiseIncrement:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    xi1, xi2 = rng.normals(1)[0]
    return NoiseIncrement.from_normals(xi1, xi2, dt)


def em_step(state, params: ModelParams, ops: Operators, dt: float,
            noise: NoiseIncrement, renormalize: bool = True) -> np.ndarray:
    """One Euler-Maruyama step using the sparse operator matrices.

    ``<a>`` is taken on the input state.  With ``renormalize=False`` the raw
    Euler iterate is returned so the caller can inspect its norm.
    """
    psi = np.asarray(state, dtype=complex)
    lam = params.lam
    lam2 = lam * lam
    dB = noise.dB
    a_psi = ops.a @ psi
    norm2 = np.vdot(psi, psi).real
    at = np.vdot(psi, a_psi) / norm2
    atc = np.conj(at)
    drift = (-1j * (ops.H @ psi) - lam2 * (ops.number @ psi)
             + lam2 * atc * a_psi - 0.5 * lam2 * abs(at) ** 2 * psi)
    diffusion = lam * (a_psi - 0.5 * at * psi) * dB - 0.5 * lam * atc * np.conj(dB) * psi
    out = psi + drift * dt + diffusion
    if not np.all(np.isfinite(out)):
        raise NonFiniteAmplitude("non-finite amplitude after Euler-Maruyama step")
    if renormalize:
        out = out / np.linalg.norm(out)
    return out


@dataclass
class TrajectoryRecord:
    """Sampled observables along one path.

    Per-sample ``norm_drift`` is the mean per-step change of <psi|psi> over
    the preceding interval (before renormalization) and ``trunc_top`` the
    largest top-5-level population seen in it.
    """

    times: np.ndarray
    a_mean: np.ndarray
    var_a: np.ndarray
    delta_a_sq: np.ndarray
    sx_mean: np.ndarray
    cov_current_field: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    norm_drift: np.ndarray
    trunc_top: np.ndarray
    stopping_time: float | None = None
    outcome: int | None = None
    truncation_max: float = 0.0
    norm_drift_stats: dict = field(default_factory=dict)
    valid: bool = True
    final_state: np.ndarray | None = None
    path_index: int | None = None

    def __len__(self):
        return len(self.times)

    def observables_at(self, i: int) -> ObservableSet:
        return ObservableSet(
            a_mean=complex(self.a_mean[i]),
            var_a=float(self.var_a[i]),
            delta_a_sq=complex(self.delta_a_sq[i]),
            sx_mean=float(self.sx_mean[i]),
            cov_current_field=float(self.cov_current_field[i]),
            energy=float(self.energy[i]),
            norm=float(self.norm[i]),
        )

    @property
    def reduced(self) -> bool:
        return self.stopping_time is not None


def _row(psi, hi, sq, params):
    norm2, a, num, a2, sx, sxa, sz, top = kernels.moments(psi, hi, sq)
    a = a / norm2
    num = num / norm2
    a2 = a2 / norm2
    sx = sx / norm2
    sxa = sxa / norm2
    sz = sz / norm2
    return (
        a,
        max(num - abs(a) ** 2, 0.0),
        a2 - a * a,
        sx,
        2.0 * sxa.imag - 2.0 * sx * a.imag,
        params.omega * num + 0.5 * params.nu * sz + 2.0 * params.g * sxa.real,
        math.sqrt(norm2),
        top / norm2,
    )


def evolve(state, params: ModelParams, config: IntegratorConfig, t_end: float,
           rng: RngStream, *, threshold: float | None = None,
           stop_after: float | None = None, on_truncation: str = "raise") -> TrajectoryRecord:
    """Integrate from ``state`` to ``t_end``, sampling every ``sample_interval``.

    Parameters
    ----------
    threshold : float, optional
        If given, the first sample time t > 0 with ``|<sigma_x>| > threshold``
        is stored as the stopping time and ``sign(<sigma_x>)`` as the outcome.
    stop_after : float, optional
        Halt this long after the stopping time instead of running to ``t_end``.
    on_truncation : {"raise", "flag"}
        What to do when the top-level monitor trips: raise ``CutoffExceeded``
        or stop and return a record with ``valid=False``.
    """
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if on_truncation not in ("raise", "flag"):
        raise ValueError("on_truncation must be 'raise' or 'flag'")
    psi = np.array(spin_field(state), dtype=np.complex128, copy=True)
    n_levels = psi.shape[1]
    sq = kernels.sqrt_levels(n_levels)
    dt = config.dt
    per_sample = config.steps_per_sample
    n_total = int(round(t_end / dt))
    trunc_tol = config.trunc_tol
    hi = n_levels - 1

    times = [0.0]
    rows = [_row(psi, hi, sq, params)]
    drifts = [0.0]
    tops = [rows[0][7]]
    stop_time = None
    outcome = None
    valid = True
    drift_total = 0.0
    drift_max = 0.0
    trunc_max = rows[0][7]
    step = 0
    end_step = n_total

    while step < end_step:
        k = min(per_sample, end_step - step)
        dB = rng.increments(k, dt)
        hi, norm2, done, dsum, dmax, tmax, status = kernels.advance(
            psi, hi, dB, dt, params.omega, params.nu, params.g, params.lam, sq, trunc_tol)
        step += done
        if status == kernels.NONFINITE:
            raise NonFiniteAmplitude(f"non-finite amplitude at t={step * dt:.6g}; reduce dt")
        if config.renormalize_each_step:
            psi[:, : hi + 1] /= math.sqrt(norm2)
        drift_total += dsum
        drift_max = max(drift_max, dmax)
        trunc_max = max(trunc_max, tmax)

        t = step * dt
        row = _row(psi, hi, sq, params)
        times.append(t)
        rows.append(row)
        drifts.append(dsum / done)
        tops.append(tmax)

        if status == kernels.TRUNCATED:
            if on_truncation == "raise":
                raise CutoffExceeded(
                    f"top-level population {tmax:.3g} > {trunc_tol:.3g} at t={t:.6g}")
            valid = False
            break
        if threshold is not None and stop_time is None and abs(row[3]) > threshold:
            stop_time = t
            outcome = 1 if row[3] > 0 else -1
            if stop_after is not None:
                end_step = min(end_step, step + int(round(stop_after / dt)))

    cols = list(zip(*rows))
    return TrajectoryRecord(
        times=np.array(times),
        a_mean=np.array(cols[0], dtype=complex),
        var_a=np.array(cols[1]),
        delta_a_sq=np.array(cols[2], dtype=complex),
        sx_mean=np.array(cols[3]),
        cov_current_field=np.array(cols[4]),
        energy=np.array(cols[5]),
        norm=np.array(cols[6]),
        norm_drift=np.array(drifts),
        trunc_top=np.array(tops),
        stopping_time=stop_time,
        outcome=outcome,
        truncation_max=trunc_max,
        norm_drift_stats={
            "steps": step,
            "mean": drift_total / step if step else 0.0,
            "max_abs": drift_max,
        },
        valid=valid,
        final_state=psi.reshape(-1).copy(),
    )
