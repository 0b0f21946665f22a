"""Deterministic migration and mutation maps and the drift they induce.

All functions operate on the last axis, so a stack of states of shape
``(..., K)`` is processed in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, InvalidPopulationSize, Params, Regime, freqs_of

E2 = math.e**2


def log1m_pow(u, K: int) -> np.ndarray:
    """``K * log(1 - u)``, with ``-inf`` at ``u = 1``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return K * np.log1p(-u)


def one_minus_pow(u, K: int) -> np.ndarray:
    """``(1 - u)**K``; log1p form below 0.5 where the direct power loses digits."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(u < 0.5, np.exp(K * np.log1p(-np.minimum(u, 0.5))), (1.0 - u) ** K)


def _check_unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(~(u >= 0.0) | ~(u <= 1.0)):
        raise DomainError("argument must lie in [0, 1]")
    return u


def _geom_ratio(u, K):
    # [1 - (1-u)^K] / u, equal to K at u = 0
    u = np.asarray(u, dtype=float)
    safe = np.where(u > 0, u, 1.0)
    with np.errstate(divide="ignore"):
        val = -np.expm1(K * np.log1p(-np.minimum(safe, 1.0))) / safe
    # the ratio is at most K; clamp the last-ulp overshoot near u = 0
    return np.where(u > 0, np.minimum(val, float(K)), float(K))


def r_weight(u, K: int):
    """Emigration weight ``(1-u) [1 - (1-u)^K] / u`` (``K`` at ``u = 0``).

    Equals ``sum_{k=1}^K (1-u)^k``, the expected number of failures before the
    first success in ``K`` Bernoulli(u) trials, censored at ``K``.
    """
    if K < 2:
        raise DomainError("K must be >= 2")
    u = _check_unit(u)
    out = (1.0 - u) * _geom_ratio(u, K)
    return float(out) if out.ndim == 0 else out


def r_weight_bar(u, K: int):
    """Emigration weight ``[1 - (1-u)^K] / u`` of the theta >= 0 construction."""
    if K < 2:
        raise DomainError("K must be >= 2")
    u = _check_unit(u)
    out = _geom_ratio(u, K)
    return float(out) if out.ndim == 0 else out


def emigration_weights(z, K: int, regime: Regime = Regime.GENERAL) -> np.ndarray:
    z = freqs_of(z)
    if Regime(regime) is Regime.GENERAL:
        return (1.0 - z) * _geom_ratio(z, K)
    return _geom_ratio(z, K)


def mainland_freqs(z, K: int | None = None) -> np.ndarray:
    """Mainland allele frequencies ``(1-z_i)^K / sum_l (1-z_l)^K``.

    Evaluated as a softmax of ``K log(1 - z_i)`` so nothing underflows for
    large ``K``. ``K`` defaults to the length of the last axis; pass it
    explicitly for zero-padded ranked states.
    """
    z = freqs_of(z)
    K = z.shape[-1] if K is None else K
    logw = log1m_pow(z, K)
    logw = logw - logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    return w / w.sum(axis=-1, keepdims=True)


def homing_ratio(z, K: int | None = None, regime: Regime = Regime.GENERAL) -> np.ndarray:
    """``sum_j z_j r_j(z) / sum_l (1 - z_l)^K``.

    Bounded by ``2 e^2`` on ranked states with unit mass.
    """
    z = freqs_of(z)
    K = z.shape[-1] if K is None else K
    num = np.sum(z * emigration_weights(z, K, regime), axis=-1)
    den = np.sum(one_minus_pow(z, K), axis=-1)
    return num / den


def minimum_population(params: Params, K: int) -> int:
    """Smallest population size for which every cell probability is valid.

    Returns ``max(ceil(alpha K / 2), ceil(mu / 2), 1) + 1`` where ``mu`` is the
    regime's total mutation intensity; this keeps the per-step migration and
    mutation removals strictly below one.
    """
    mig = math.ceil(params.alpha * K / 2)
    mut = math.ceil(params.mutation_intensity / 2)
    return max(mig, mut, 1) + 1


@dataclass(frozen=True)
class KernelConfig:
    params: Params
    K: int
    N: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise DomainError(f"K must be an integer >= 2, got {self.K}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidPopulationSize(f"N must be a positive integer, got {self.N}")
        n_min = minimum_population(self.params, self.K)
        if self.N < n_min:
            raise InvalidPopulationSize(
                f"N={self.N} is below the minimum population size N_min={n_min} "
                f"for K={self.K}, theta={self.params.theta}, alpha={self.params.alpha}"
            )

    @property
    def mutation_rate(self) -> float:
        """Per-pair mutation probability ``mu / (2 N (K - 1))``."""
        return self.params.mutation_intensity / (2 * self.N * (self.K - 1))


def _state(z, K):
    z = freqs_of(z)
    if z.shape[-1] != K:
        raise DomainError(f"state has {z.shape[-1]} alleles, config expects K={K}")
    return z


def migration_step(z, cfg: KernelConfig) -> np.ndarray:
    """Island-model migration with state-dependent rates.

    ``z*_i = z_i + p_i(z) m(z) - z_i m_i(z)`` with ``m_i = alpha r_i / (2N)``
    and ``m(z) = sum_j z_j m_j``.
    """
    z = _state(z, cfg.K)
    m_i = cfg.params.alpha * emigration_weights(z, cfg.K, cfg.params.regime) / (2 * cfg.N)
    if np.any(m_i >= 1.0):
        raise InvalidPopulationSize(f"migration rate reaches 1 at N={cfg.N}")
    m = np.sum(z * m_i, axis=-1, keepdims=True)
    return z + mainland_freqs(z, cfg.K) * m - z * m_i


def mutation_step(zstar, cfg: KernelConfig) -> np.ndarray:
    """Uniform mutation: ``z**_i = z*_i (1 - (K-1) u) + (1 - z*_i) u``."""
    z = _state(zstar, cfg.K)
    u = cfg.mutation_rate
    if (cfg.K - 1) * u >= 1.0:
        raise InvalidPopulationSize(f"total mutation probability {(cfg.K - 1) * u} >= 1")
    return z * (1.0 - (cfg.K - 1) * u) + (1.0 - z) * u


def gametic_freqs(z, cfg: KernelConfig) -> np.ndarray:
    """Migration followed by mutation: the multinomial cell probabilities."""
    return mutation_step(migration_step(z, cfg), cfg)


def drift_b(z, params: Params, K: int | None = None) -> np.ndarray:
    """Drift coefficients ``b_i(z)`` of the K-allele diffusion.

    ``K`` defaults to the length of the last axis.
    """
    z = freqs_of(z)
    K = z.shape[-1] if K is None else K
    mu = params.mutation_intensity
    r = emigration_weights(z, K, params.regime)
    p = mainland_freqs(z, K)
    inflow = np.sum(z * r, axis=-1, keepdims=True)
    a = params.alpha
    return 0.5 * (mu * (1.0 - z) / (K - 1) - mu * z + a * p * inflow - a * z * r)


def satisfies_remark_conditions(r, p, K: int, states, tol: float = 1e-12) -> dict:
    """Evaluate the sufficient conditions on a general migration family.

    ``r`` maps an array of frequencies to emigration weights (elementwise);
    ``p`` maps a stack of states ``(n, K)`` to mainland frequencies. The
    supremum-type quantities are estimated over ``states`` (ranked, unit
    mass), so they are finite-K lower bounds; no limit is asserted. The
    returned dict holds each quantity and ``pointwise_ok`` for the only
    condition checkable exactly at finite K, ``1 - u - u r(u) >= 0``.
    """
    z = np.atleast_2d(freqs_of(states))
    if z.shape[-1] != K:
        raise DomainError("states must have K coordinates")
    grid = np.linspace(0.0, 1.0, 4097)
    slack = 1.0 - grid - grid * r(grid)
    rz = r(z)
    pz = p(z)
    inflow = np.sum(z * rz, axis=-1)
    eps = np.array([0.25, 0.5, 0.75])
    return {
        "pointwise_ok": bool(np.all(slack >= -tol)),
        "compactness": float(np.max(inflow * np.sum(pz * z, axis=-1))),
        "slack_sup": float(np.max(slack * grid)),
        "top_inflow": float(np.max(inflow * pz[:, 0] * z[:, 0])),
        "rate_slack": [float(np.max(np.sum((1 - z - z * rz) * z ** (1 + e), axis=-1))) for e in eps],
        "rate_inflow": [float(np.max(inflow * np.sum(pz * z ** (1 + e), axis=-1))) for e in eps],
    }
