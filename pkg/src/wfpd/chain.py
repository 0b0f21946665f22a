"""The K-allele Wright-Fisher chain: migration, mutation, multinomial resampling."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import DiscreteSimplexState, DomainError, InsufficientData, NumericalError, Regime
from .kernel import KernelConfig, gametic_freqs
from .rng import make_rng
from .stats import batch_means

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class ChainConfig:
    """Run settings. ``burn_in`` defaults to ``10 N`` and ``thin`` to ``K``."""

    kernel: KernelConfig
    seed: int = 0
    steps: int = 0
    burn_in: int | None = None
    thin: int | None = None

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", min(10 * self.kernel.N, self.steps))
        if self.thin is None:
            object.__setattr__(self, "thin", self.kernel.K)
        if self.steps < 0 or self.burn_in < 0:
            raise DomainError("steps and burn_in must be nonnegative")
        if self.burn_in > self.steps:
            raise DomainError(f"burn_in={self.burn_in} exceeds steps={self.steps}")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")


@dataclass(frozen=True)
class ChainPath:
    """Retained states as a count matrix ``(n, K)`` with their step indices."""

    counts: np.ndarray
    steps: np.ndarray
    config: ChainConfig = field(repr=False)

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / self.config.kernel.N

    @property
    def states(self) -> list[DiscreteSimplexState]:
        return [DiscreteSimplexState(c) for c in self.counts]

    def __len__(self):
        return self.counts.shape[0]


def cell_probabilities(z, cfg: KernelConfig) -> np.ndarray:
    """Post-migration, post-mutation frequencies, clamped against rounding.

    Entries in ``(-1e-12, 0)`` are set to zero and the vector renormalized;
    anything more negative raises :class:`NumericalError`.
    """
    q = gametic_freqs(z, cfg)
    if np.any(q < 0):
        if np.any(q < -CLAMP_TOL):
            raise NumericalError(f"negative cell probability {q.min()!r}")
        q = np.maximum(q, 0.0)
    return q / q.sum(axis=-1, keepdims=True)


@njit(cache=True)
def _cell_probs_1d(z, alpha, K, N, u, general):
    # scalar-loop twin of cell_probabilities for the simulation hot path
    logw = np.empty(K)
    r = np.empty(K)
    mx = -np.inf
    for i in range(K):
        zi = z[i]
        if zi >= 1.0:
            logw[i] = -np.inf
            ratio = 1.0
        elif zi > 0.0:
            lg = K * np.log1p(-zi)
            logw[i] = lg
            ratio = -np.expm1(lg) / zi
        else:
            logw[i] = 0.0
            ratio = float(K)
        r[i] = (1.0 - zi) * ratio if general else ratio
        if logw[i] > mx:
            mx = logw[i]
    tot = 0.0
    for i in range(K):
        logw[i] = np.exp(logw[i] - mx)
        tot += logw[i]
    m = 0.0
    for i in range(K):
        r[i] = alpha * r[i] / (2.0 * N)
        m += z[i] * r[i]
    q = np.empty(K)
    qs = 0.0
    keep = 1.0 - (K - 1) * u
    for i in range(K):
        zs = z[i] + logw[i] / tot * m - z[i] * r[i]
        qi = zs * keep + (1.0 - zs) * u
        if qi < 0.0:
            if qi < -1e-12:
                return q, False
            qi = 0.0
        q[i] = qi
        qs += qi
    for i in range(K):
        q[i] /= qs
    return q, True


def chain_step(state: DiscreteSimplexState, cfg: ChainConfig | KernelConfig, rng: np.random.Generator):
    """One generation: ``N z' ~ Multinomial(N, z**)``."""
    kcfg = cfg.kernel if isinstance(cfg, ChainConfig) else cfg
    counts = state.counts if isinstance(state, DiscreteSimplexState) else np.asarray(state)
    if counts.sum() != kcfg.N:
        raise DomainError(f"state has population {counts.sum()}, config expects N={kcfg.N}")
    q = cell_probabilities(counts / kcfg.N, kcfg)
    return DiscreteSimplexState(rng.multinomial(kcfg.N, q))


def _simulate(counts, kcfg, steps, burn_in, thin, rng):
    N, K = kcfg.N, kcfg.K
    alpha, u = kcfg.params.alpha, kcfg.mutation_rate
    general = kcfg.params.regime is Regime.GENERAL
    keep = np.arange(burn_in, steps + 1, thin)
    out = np.empty((keep.size, kcfg.K), dtype=np.int64)
    j = 0
    c = np.array(counts, dtype=np.int64)
    for t in range(steps + 1):
        if j < keep.size and keep[j] == t:
            out[j] = c
            j += 1
        if t == steps:
            break
        q, ok = _cell_probs_1d(c / N, alpha, K, N, u, general)
        if not ok:
            raise NumericalError(f"negative cell probability at step {t}")
        c = rng.multinomial(N, q)
    return out, keep


def run_chain(init: DiscreteSimplexState, cfg: ChainConfig, replicate: int = 0) -> ChainPath:
    """Simulate ``cfg.steps`` generations from ``init``.

    Keeps the states at steps ``burn_in, burn_in + thin, ...``. The result is
    a deterministic function of ``(init, cfg, replicate)``.
    """
    init = init if isinstance(init, DiscreteSimplexState) else DiscreteSimplexState(init)
    kcfg = cfg.kernel
    if init.N != kcfg.N or init.K != kcfg.K:
        raise DomainError(f"initial state (K={init.K}, N={init.N}) does not match the config")
    rng = make_rng(cfg.seed, replicate)
    counts, keep = _simulate(init.counts, kcfg, cfg.steps, cfg.burn_in, cfg.thin, rng)
    return ChainPath(counts, keep, cfg)


def _run_one(args):
    init, cfg, r = args
    return run_chain(init, cfg, r)


def run_replicates(init, cfg: ChainConfig, replicates: int, jobs: int = 1) -> list[ChainPath]:
    """Independent paths on streams ``(seed, r)``, returned in replicate order."""
    tasks = [(init, cfg, r) for r in range(replicates)]
    if jobs <= 1 or replicates <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, tasks))


def ergodic_average(path: ChainPath, f, vectorized: bool = False) -> tuple[float, float]:
    """Mean of ``f`` over retained frequency vectors, with batch-means error.

    ``f`` takes one frequency vector, or the whole ``(n, K)`` array when
    ``vectorized`` is set.
    """
    z = path.freqs
    if z.shape[0] < 16:
        raise InsufficientData(f"need at least 16 retained states, got {z.shape[0]}")
    vals = np.asarray(f(z), dtype=float) if vectorized else np.array([f(row) for row in z], dtype=float)
    mean, se = batch_means(vals)
    if np.ptp(vals) == 0:
        se = 0.0
    return mean, se


def uniform_counts(K: int, N: int) -> DiscreteSimplexState:
    """Counts as close to uniform as integers allow."""
    c = np.full(K, N // K, dtype=np.int64)
    c[: N - c.sum()] += 1
    return DiscreteSimplexState(c)
