"""Time-stepping of the K-allele Wright-Fisher diffusion.

Two one-step schemes, both with conditional mean ``b(z) dt`` and covariance
``a(z) dt + O(dt^2)``:

``dirichlet`` (default)
    ``z' ~ Dirichlet((1/dt - 1) (z + b(z) dt))``. Stays on the simplex
    without any projection, so rare alleles are not inflated at the boundary.
``euler_project``
    Euler-Maruyama followed by clamping to nonnegative and renormalizing.
    Clamping adds O(sqrt(z dt)) mass per near-zero coordinate per step, which
    swamps the dynamics once many coordinates sit near zero (large K).

The Euler noise uses an exact square root of ``a(z) = diag(z) - z z^T``:
with ``s = sqrt(z)``, ``sigma = diag(s) - z s^T`` satisfies
``sigma sigma^T = a(z)`` whenever ``sum(z) = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, NumericalError, Params, freqs_of, rank
from .kernel import drift_b
from .rng import make_rng


def max_stable_dt(params: Params, K: int) -> float:
    """Step-size cap ``0.1 / (1 + theta + alpha K)``."""
    return 0.1 / (1.0 + abs(params.theta) + params.alpha * K)


def default_dt(params: Params, K: int) -> float:
    return min(1e-3, max_stable_dt(params, K))


@dataclass(frozen=True)
class DiffusionConfig:
    params: Params
    K: int
    dt: float | None = None
    t_end: float = 0.0
    seed: int = 0
    scheme: str = "dirichlet"

    def __post_init__(self):
        if self.K < 2:
            raise DomainError("K must be >= 2")
        if self.dt is None:
            object.__setattr__(self, "dt", default_dt(self.params, self.K))
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        cap = max_stable_dt(self.params, self.K)
        if self.dt > cap * (1 + 1e-12):
            raise DomainError(f"dt={self.dt} exceeds the stability cap {cap:.3g} for K={self.K}")
        if self.t_end < 0:
            raise DomainError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        return math.ceil(self.t_end / self.dt - 1e-9) if self.t_end > 0 else 0


def diffusion_coeff(z) -> np.ndarray:
    """``a_ij(z) = z_i (delta_ij - z_j)``; batched over leading axes."""
    z = freqs_of(z)
    return z[..., :, None] * (np.eye(z.shape[-1]) - z[..., None, :])


def noise_factor(z) -> np.ndarray:
    """Matrix ``sigma(z)`` with ``sigma sigma^T = a(z)`` (explicit, for checks)."""
    z = freqs_of(z)
    s = np.sqrt(z)
    return np.eye(z.shape[-1]) * s[..., None, :] - z[..., :, None] * s[..., None, :]


def apply_noise_factor(z, xi) -> np.ndarray:
    """``sigma(z) @ xi`` in O(K): ``sqrt(z) xi - z (sqrt(z) . xi)``."""
    s = np.sqrt(z)
    return s * xi - z * np.sum(s * xi, axis=-1, keepdims=True)


def project(y) -> np.ndarray:
    """Clamp to nonnegative, then renormalize onto the simplex."""
    y = np.maximum(y, 0.0)
    tot = y.sum(axis=-1, keepdims=True)
    if np.any(tot <= 0) or not np.all(np.isfinite(tot)):
        raise NumericalError("projection onto the simplex failed (all mass clamped away)")
    return y / tot


def _euler_project(z, params, K, h, rng):
    xi = rng.standard_normal(z.shape)
    return project(z + drift_b(z, params, K) * h + math.sqrt(h) * apply_noise_factor(z, xi))


def _dirichlet(z, params, K, h, rng):
    mean = z + drift_b(z, params, K) * h
    if np.any(mean < -1e-12):
        raise NumericalError("step too large: drifted mean left the simplex")
    g = rng.standard_gamma(np.maximum(mean, 0.0) * (1.0 / h - 1.0))
    return project(g)


SCHEMES = {"dirichlet": _dirichlet, "euler_project": _euler_project}


def diffusion_step(z, cfg: DiffusionConfig, rng: np.random.Generator, dt: float | None = None) -> np.ndarray:
    """Advance ``z`` (one state or a stack ``(..., K)``) by one step."""
    z = freqs_of(z)
    if z.shape[-1] != cfg.K:
        raise DomainError(f"state has {z.shape[-1]} alleles, config expects K={cfg.K}")
    return SCHEMES[cfg.scheme](z, cfg.params, cfg.K, cfg.dt if dt is None else dt, rng)


def run_diffusion(init, cfg: DiffusionConfig, replicate: int = 0, record_every: int = 1):
    """Integrate from ``init`` to ``cfg.t_end``.

    Returns ``(times, states)``; ``states`` has shape ``(n_records, ..., K)``.
    With ``record_every = 1`` the path has ``ceil(t_end / dt) + 1`` entries.
    ``init`` may itself be a stack of states, integrated in lockstep on one
    stream. The last step is shortened so the path ends exactly at ``t_end``.
    """
    z = np.array(freqs_of(init), dtype=float)
    if z.shape[-1] != cfg.K:
        raise DomainError(f"initial state has {z.shape[-1]} alleles, config expects K={cfg.K}")
    if np.any(z < 0) or np.any(np.abs(z.sum(axis=-1) - 1) > 1e-12):
        raise DomainError("initial state is not on the simplex")
    rng = make_rng(cfg.seed, replicate)
    step = SCHEMES[cfg.scheme]
    n = cfg.n_steps
    idx = list(range(0, n + 1, record_every))
    if idx[-1] != n:
        idx.append(n)
    times = np.empty(len(idx))
    out = np.empty((len(idx),) + z.shape)
    times[0], out[0] = 0.0, z
    j = 1
    for k in range(1, n + 1):
        h = min(cfg.dt, cfg.t_end - (k - 1) * cfg.dt)
        z = step(z, cfg.params, cfg.K, h, rng)
        if j < len(idx) and idx[j] == k:
            times[j] = min(k * cfg.dt, cfg.t_end)
            out[j] = z
            j += 1
    return times, out


def ranked_path(path) -> np.ndarray:
    """Apply the ranking map at every time point (and every replicate)."""
    return rank(np.asarray(path, dtype=float))


def stationary_sample(cfg: DiffusionConfig, n_paths: int, n_per_path: int, spacing: float,
                      burn_in: float | None = None, init=None, replicate: int = 0) -> np.ndarray:
    """Ranked draws from the diffusion's long-run law.

    Runs ``n_paths`` paths in lockstep from ``init`` (uniform by default), for
    ``burn_in`` time units (default ``20 / (1 + theta)``), then records every
    ``spacing`` time units. Returns an array ``(n_paths * n_per_path, K)``.
    """
    K = cfg.K
    burn_in = 20.0 / (1.0 + max(cfg.params.theta, 0.0)) if burn_in is None else burn_in
    z = np.full((n_paths, K), 1.0 / K) if init is None else np.broadcast_to(freqs_of(init), (n_paths, K)).copy()
    rng = make_rng(cfg.seed, replicate)
    step = SCHEMES[cfg.scheme]
    dt = cfg.dt
    n_burn = math.ceil(burn_in / dt)
    gap = max(1, round(spacing / dt))
    draws = []
    total = n_burn + gap * (n_per_path - 1)
    for k in range(total + 1):
        if k >= n_burn and (k - n_burn) % gap == 0:
            draws.append(rank(z))
        if k == total:
            break
        z = step(z, cfg.params, K, dt, rng)
    return np.concatenate(draws, axis=0)
