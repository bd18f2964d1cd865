"""Summary statistics, log-log power-law fits and Gaussian KDE."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySample, InsufficientPoints, NonPositiveInput

PINNED_EXPONENT = -2.0 / 3.0
MAX_GRID = 1 << 22


@dataclass(frozen=True)
class FitResult:
    k: float
    exponent: float
    k_fixed_exponent: float
    residual: float
    fixed_exponent: float = PINNED_EXPONENT


def power_law_fit(points, fixed_exponent: float = PINNED_EXPONENT) -> FitResult:
    """Fit tau = k g^p by least squares in log-log space.

    Also returns the best ``k`` with ``p`` pinned to ``fixed_exponent``,
    i.e. the geometric mean of tau g^(-p).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise InsufficientPoints("need at least 3 (g, tau) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise NonPositiveInput("power-law fit needs finite positive g and tau")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    log_k_fixed = float(np.mean(y - fixed_exponent * x))
    return FitResult(
        k=math.exp(intercept),
        exponent=float(slope),
        k_fixed_exponent=math.exp(log_k_fixed),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        fixed_exponent=fixed_exponent,
    )


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("Silverman's rule needs at least 2 samples")
    std = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    iqr = q75 - q25
    # an IQR below the data's float resolution is a tie, not a scale
    tiny = 16 * np.finfo(float).eps * float(np.max(np.abs(x)))
    spread = min(std, iqr / 1.34) if iqr > tiny else std
    if spread <= 0:
        raise ValueError("samples have zero spread; pass an explicit bandwidth")
    return 0.9 * spread * x.size ** (-0.2)


@dataclass(frozen=True)
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def modes(self) -> np.ndarray:
        """Grid positions of strict local maxima."""
        d = self.density
        idx = np.nonzero((d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:]))[0] + 1
        return self.grid[idx]


def gaussian_kde(samples, bandwidth: float | None = None, n_grid: int = 512,
                 span: float = 4.0) -> DensityEstimate:
    """Gaussian kernel density on a uniform grid covering the data +- ``span`` bandwidths.

    ``n_grid`` is a minimum; the grid is refined when the bandwidth is small
    against the data range.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("no samples")
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be > 0")
    lo, hi = x.min() - span * h, x.max() + span * h
    # keep at least 8 grid points per bandwidth so the trapezoid rule holds
    n = max(n_grid, min(MAX_GRID, int(math.ceil(8 * (hi - lo) / h)) + 1))
    grid = np.linspace(lo, hi, n)
    dens = np.empty(n)
    step = max(1, (1 << 22) // x.size)
    for i in range(0, n, step):
        z = (grid[i:i + step, None] - x[None, :]) / h
        dens[i:i + step] = np.exp(-0.5 * z * z).sum(axis=1)
    dens /= x.size * h * math.sqrt(2 * math.pi)
    return DensityEstimate(grid=grid, density=dens, bandwidth=h)


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    std: float | None
    stderr: float | None
    median: float
    counts: np.ndarray
    edges: np.ndarray


def summarize(samples, bins="sturges") -> Summary:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("no samples")
    std = float(np.std(x, ddof=1)) if x.size > 1 else None
    counts, edges = np.histogram(x, bins=bins)
    return Summary(
        n=int(x.size),
        mean=float(np.mean(x)),
        std=std,
        stderr=std / math.sqrt(x.size) if std is not None else None,
        median=float(np.median(x)),
        counts=counts,
        edges=edges,
    )


def is_unimodal(counts) -> bool:
    """True if counts rise (weakly) to one peak and then fall (weakly)."""
    c = np.asarray(counts)
    peak = int(np.argmax(c))
    return bool(np.all(np.diff(c[: peak + 1]) >= 0) and np.all(np.diff(c[peak:]) <= 0))
