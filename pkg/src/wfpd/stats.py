"""Small statistical primitives shared by the simulation and analysis modules."""
from __future__ import annotations

import math

import numpy as np
from scipy import stats as _st

from .core import DomainError, InsufficientData


def batch_means(x, n_batches: int | None = None) -> tuple[float, float]:
    """Sample mean and batch-means standard error.

    Uses ``ceil(sqrt(n))`` batches by default; trailing samples that do not
    fill a batch are dropped from the error estimate only.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise InsufficientData(f"need at least 2 samples, got {n}")
    mean = float(x.mean())
    b = n_batches or math.ceil(math.sqrt(n))
    size = n // b
    if size < 1 or b < 2:
        raise InsufficientData(f"cannot form {b} batches from {n} samples")
    bm = x[: b * size].reshape(b, size).mean(axis=1)
    return mean, float(bm.std(ddof=1) / math.sqrt(b))


def ks_distance(sample1, sample2) -> float:
    """Two-sample Kolmogorov-Smirnov statistic ``sup |F1 - F2|``."""
    a = np.asarray(sample1, dtype=float).ravel()
    b = np.asarray(sample2, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InsufficientData("both samples must be nonempty")
    return float(_st.ks_2samp(a, b).statistic)


def ks_critical(n1: int, n2: int, c: float = 1.63) -> float:
    """Asymptotic two-sample KS critical value; ``c = 1.63`` is the 1% level."""
    return c * math.sqrt((n1 + n2) / (n1 * n2))


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line through ``(log x, log y)``: slope, intercept, r^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d and aligned")
    if x.size < 3:
        raise InsufficientData(f"need at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("log-log fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if ss_tot == 0 else 1.0 - np.sum(resid**2) / ss_tot
    return float(slope), float(intercept), float(r2)
