"""Stationary-comparison pipelines built on the simulators and the oracle."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .chain import ChainConfig, run_chain, uniform_counts, ergodic_average
from .core import InsufficientData, Params
from .generators import power_sum
from .oracle import stationary_moment
from .stats import batch_means, ks_critical, ks_distance, loglog_fit

# finite-K plus finite-N allowance added to 4 SE in moment comparisons
BIAS_ALLOWANCE = 0.02


@dataclass
class MomentReport:
    m: int
    estimate: float
    stderr: float
    analytic: float
    z_score: float
    allowance: float = BIAS_ALLOWANCE

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.analytic) <= 4 * self.stderr + self.allowance

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


@dataclass
class CompareReport:
    statistic: str
    value: float
    n1: int
    n2: int
    pass_threshold: float

    @property
    def passed(self) -> bool:
        return self.value <= self.pass_threshold

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


def moment_report(m: int, values, params: Params, allowance: float = BIAS_ALLOWANCE) -> MomentReport:
    """Batch-means estimate of ``E[phi_m]`` from a series, against the closed form."""
    est, se = batch_means(values)
    exact = stationary_moment(m, params)
    z = (est - exact) / se if se > 0 else (0.0 if est == exact else float("inf") * np.sign(est - exact))
    return MomentReport(int(m), est, se, exact, float(z), allowance)


def stationary_compare_chain(cfg: ChainConfig, m_list, init=None, replicate: int = 0,
                             allowance: float = BIAS_ALLOWANCE, path=None) -> list[MomentReport]:
    """Ergodic ``phi_m`` averages of one chain run versus the stationary moments.

    Starts from the near-uniform count vector unless ``init`` is given; an
    already computed ``path`` may be passed to share one run across calls.
    """
    k = cfg.kernel
    if path is None:
        path = run_chain(init if init is not None else uniform_counts(k.K, k.N), cfg, replicate)
    out = []
    for m in m_list:
        est, se = ergodic_average(path, lambda z, m=m: power_sum(z, m), vectorized=True)
        exact = stationary_moment(m, k.params)
        z = (est - exact) / se if se > 0 else 0.0
        out.append(MomentReport(int(m), est, se, exact, float(z), allowance))
    return out


def top_means(samples, top_j: int) -> np.ndarray:
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] == 0:
        raise InsufficientData("need a nonempty (n, J) sample")
    top = s[:, :top_j]
    if top.shape[1] < top_j:
        top = np.pad(top, ((0, 0), (0, top_j - top.shape[1])))
    return top.mean(axis=0)


def ranked_top_compare(diff_sample, pd_sample, top_j: int = 5, threshold: float = 0.02) -> CompareReport:
    """Mean absolute difference of the top ``top_j`` ranked-coordinate means.

    ``pd_sample`` may be an ``(n, J)`` array or a sequence of ``PdSample``.
    """
    if len(diff_sample) == 0 or len(pd_sample) == 0:
        raise InsufficientData("both samples must be nonempty")
    if hasattr(pd_sample[0], "ranked_freqs"):
        pd_sample = np.stack([d.ranked_freqs for d in pd_sample])
    a = top_means(diff_sample, top_j)
    b = top_means(pd_sample, top_j)
    return CompareReport("meanAbsDiff", float(np.mean(np.abs(a - b))), len(diff_sample), len(pd_sample), threshold)


def ks_compare(sample1, sample2) -> CompareReport:
    """KS statistic with the 1% asymptotic critical value as threshold."""
    n1, n2 = np.size(sample1), np.size(sample2)
    return CompareReport("KS", ks_distance(sample1, sample2), n1, n2, ks_critical(n1, n2))


__all__ = [
    "MomentReport", "CompareReport", "moment_report", "stationary_compare_chain", "top_means",
    "ranked_top_compare", "ks_compare", "ks_distance", "ks_critical", "loglog_fit", "batch_means",
    "BIAS_ALLOWANCE",
]
