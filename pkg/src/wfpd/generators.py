"""Test functions ``phi_m = sum_i z_i^m`` and the generators acting on them.

Three operators are evaluated:

* ``B``   -- the limit generator on the Kingman simplex, in closed form on the
  algebra generated by the ``phi_m``;
* ``B_K`` -- the generator of the ranked K-allele diffusion on the same
  algebra, via the closed form for ``B_K phi_m`` and the product rule;
* ``A_K`` -- the K-allele generator applied to an arbitrary callback, either
  with user-supplied derivatives or by central finite differences.

All state arguments may be stacks ``(..., K)``; results then have shape
``(...)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .core import DomainError, InsufficientData, Params, Regime, freqs_of, rank
from .kernel import E2, drift_b, emigration_weights, one_minus_pow
from .stats import loglog_fit


# ---------------------------------------------------------------- test functions


def power_sum(z, m: float) -> np.ndarray:
    """``sum_i z_i^m`` over nonzero coordinates, for any real ``m > 0``."""
    z = np.asarray(freqs_of(z)) if not isinstance(z, np.ndarray) else z
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sum(np.where(z > 0, np.power(np.where(z > 0, z, 1), m), 0), axis=-1)


def phi(z, m: float) -> np.ndarray | float:
    """``phi_m(z) = sum_i z_i^m`` for real ``m >= 2``."""
    if m < 2:
        raise DomainError(f"phi_m is defined for m >= 2, got m={m}")
    out = power_sum(freqs_of(z), m)
    return float(out) if np.ndim(out) == 0 else out


def _phi_lower(z, m):
    # phi_{m-1} as it enters the generators; phi_1 is the constant 1
    return 1.0 if m == 2 else power_sum(z, m - 1)


@dataclass(frozen=True)
class PhiProduct:
    """The monomial ``phi_{m_1} ... phi_{m_l}``; ``()`` is the constant 1."""

    exponents: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ex = tuple(sorted(float(m) for m in self.exponents))
        if any(m < 2 for m in ex):
            raise DomainError("every exponent must be >= 2")
        object.__setattr__(self, "exponents", ex)

    def __call__(self, z):
        z = freqs_of(z)
        out = np.ones(z.shape[:-1])
        for m in self.exponents:
            out = out * power_sum(z, m)
        return out

    def __len__(self):
        return len(self.exponents)


def _as_terms(phi_) -> Mapping[PhiProduct, float]:
    if isinstance(phi_, PhiProduct):
        return {phi_: 1.0}
    if isinstance(phi_, (int, float)) and not isinstance(phi_, bool):
        return {PhiProduct((phi_,)): 1.0}
    if isinstance(phi_, Mapping):
        return {(k if isinstance(k, PhiProduct) else PhiProduct(k)): float(v) for k, v in phi_.items()}
    return {PhiProduct(tuple(phi_)): 1.0}


def carre_du_champ(z, m: float, n: float) -> np.ndarray:
    """``<grad phi_m, a grad phi_n> = m n (phi_{m+n-1} - phi_m phi_n)``."""
    z = freqs_of(z)
    return m * n * (power_sum(z, m + n - 1) - power_sum(z, m) * power_sum(z, n))


def carre_du_champ_direct(z, m: float, n: float) -> np.ndarray:
    """Same bilinear form by explicit double sum over ``a_ij`` (for checks)."""
    z = freqs_of(z)
    gm = m * np.power(z, m - 1)
    gn = n * np.power(z, n - 1)
    a = z[..., :, None] * (np.eye(z.shape[-1]) - z[..., None, :])
    return np.einsum("...i,...ij,...j->...", gm, a, gn)


def _product_rule(single, z, exps):
    # L(phi_{m1} ... phi_{ml}) for a second-order operator L whose squared
    # field on power sums is carre_du_champ
    if len(exps) == 0:
        return np.zeros(z.shape[:-1])
    if len(exps) == 1:
        return single(exps[0])
    m, rest = exps[0], exps[1:]
    f = power_sum(z, m)
    g = PhiProduct(rest)(z)
    # Gamma(phi_m, prod rest) by the Leibniz rule for Gamma
    gam = np.zeros(z.shape[:-1])
    for k, n in enumerate(rest):
        others = rest[:k] + rest[k + 1:]
        gam = gam + PhiProduct(others)(z) * carre_du_champ(z, m, n)
    return g * single(m) + f * _product_rule(single, z, rest) + gam


# ------------------------------------------------------------- limit generator B


def B_phi_m(z, m: float, params: Params) -> np.ndarray:
    """``B phi_m = C(m,2)(phi_{m-1} - phi_m) - (m/2)(theta phi_m + alpha phi_{m-1})``.

    ``phi_1`` is the constant 1, so ``B phi_2 = 1 - alpha - (1 + theta) phi_2``
    everywhere on the closed simplex.
    """
    z = freqs_of(z)
    lo, pm = _phi_lower(z, m), power_sum(z, m)
    return m * (m - 1) / 2 * (lo - pm) - m / 2 * (params.theta * pm + params.alpha * lo)


def B_phi_product(z, phi_, params: Params):
    """``B`` applied to a monomial, a single exponent, or ``{monomial: coef}``."""
    z = freqs_of(z)
    single = lambda m: B_phi_m(z, m, params)  # noqa: E731
    out = sum(c * _product_rule(single, z, p.exponents) for p, c in _as_terms(phi_).items())
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------- ranked K-allele B_K


def _ranked_input(z, K, tol=1e-9):
    z = freqs_of(z)
    if z.shape[-1] > K:
        if np.any(z[..., K:] != 0):
            raise DomainError(f"state has more than K={K} nonzero coordinates")
        z = z[..., :K]
    elif z.shape[-1] < K:
        pad = np.zeros(z.shape[:-1] + (K - z.shape[-1],))
        z = np.concatenate([z, pad], axis=-1)
    if np.any(z < 0) or np.any(np.diff(z, axis=-1) > 0):
        raise DomainError("B_K acts on ranked (nonincreasing, nonnegative) states")
    if np.any(np.abs(z.sum(axis=-1) - 1.0) > tol):
        raise DomainError("B_K acts on states of unit mass")
    return z


def _inflow_ratio(z, K, regime):
    num = np.sum(z * emigration_weights(z, K, regime), axis=-1)
    return num / np.sum(one_minus_pow(z, K), axis=-1)


def BK_correction(z, m: float, params: Params, K: int, check: bool = True) -> np.ndarray:
    """``B_K phi_m - B phi_m`` on ranked states of unit mass.

    General regime: ``(m/2)(theta+alpha)/(K-1)(phi_{m-1} - phi_m)
    + (m/2) alpha sum_i (1-z_i)^K z_i^{m-1} (1 - z_i + S(z))``.
    In the theta >= 0 regime the mutation factor is ``theta`` and the bracket
    is ``1 + S(z)`` with the barred weights.
    """
    z = _ranked_input(z, K) if check else freqs_of(z)
    lo, pm = power_sum(z, m - 1), power_sum(z, m)
    mu = params.mutation_intensity
    S = _inflow_ratio(z, K, params.regime)[..., None]
    w = one_minus_pow(z, K) * np.where(z > 0, np.power(z, m - 1), 0.0)
    bracket = (1.0 - z + S) if params.regime is Regime.GENERAL else (1.0 + S)
    return m / 2 * mu / (K - 1) * (lo - pm) + m / 2 * params.alpha * np.sum(w * bracket, axis=-1)


def BK_phi_m(z, m: float, params: Params, K: int) -> np.ndarray:
    """Closed form of ``B_K phi_m`` at ranked ``z`` with at most ``K`` atoms.

    ``z`` shorter than ``K`` is zero-padded.
    """
    z = _ranked_input(z, K)
    out = B_phi_m(z, m, params) + BK_correction(z, m, params, K, check=False)
    return float(out) if np.ndim(out) == 0 else out


def BK_phi_m_from_drift(z, m: float, params: Params, K: int) -> np.ndarray:
    """``C(m,2)(phi_{m-1} - phi_m) + m sum_i b_i(z) z_i^{m-1}`` straight from the drift."""
    z = _ranked_input(z, K)
    lo, pm = power_sum(z, m - 1), power_sum(z, m)
    grad = m * np.where(z > 0, np.power(z, m - 1), 0.0)
    return m * (m - 1) / 2 * (lo - pm) + np.sum(drift_b(z, params, K) * grad, axis=-1)


def BK_phi_product(z, phi_, params: Params, K: int):
    """``B_K`` on a monomial (or ``{monomial: coef}``) by the product rule."""
    z = _ranked_input(z, K)
    single = lambda m: BK_phi_m(z, m, params, K)  # noqa: E731
    out = sum(c * _product_rule(single, z, p.exponents) for p, c in _as_terms(phi_).items())
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------------------ A_K


def _fd_terms(f, zz, b, hh, dtype):
    # central first and second differences, contracted against b and a(z)
    f0 = dtype(f(zz))
    first = dtype(0)
    diag = dtype(0)
    for i in range(zz.size):
        e = np.zeros(zz.size, dtype=dtype)
        e[i] = hh
        fp, fm = dtype(f(zz + e)), dtype(f(zz - e))
        first += dtype(b[i]) * (fp - fm) / (2 * hh)
        diag += zz[i] * (fp - 2 * f0 + fm) / (hh * hh)
    along = (dtype(f(zz + hh * zz)) - 2 * f0 + dtype(f(zz - hh * zz))) / (hh * hh)
    return dtype(0.5) * (diag - along) + first


def apply_A_K(f: Callable, z, params: Params, K: int | None = None, grad=None, hess=None,
              h: float = 1e-4, dtype=np.longdouble, extrapolate: bool = True) -> float:
    """``(1/2) sum a_ij d_ij f + sum b_i d_i f`` at a single state ``z``.

    ``grad`` and ``hess`` may be callables or arrays; when omitted, central
    differences with step ``h`` are used, evaluated in ``dtype`` (extended
    precision by default, since second differences lose ``eps / h^2``). The
    second-order term is contracted as ``sum_i z_i f_ii - z^T H z``, which
    needs one second difference per axis plus one along ``z``. With
    ``extrapolate`` the ``O(h^2)`` error is cancelled by combining steps ``h``
    and ``2h`` (Richardson); ``f`` must then be defined within ``2h`` of ``z``.
    """
    z = np.array(freqs_of(z), dtype=float)
    K = z.size if K is None else K
    b = drift_b(z, params, K)
    if grad is not None:
        g = np.asarray(grad(z) if callable(grad) else grad, dtype=float)
        H = np.asarray(hess(z) if callable(hess) else hess, dtype=float)
        a = z[:, None] * (np.eye(z.size) - z[None, :])
        return float(0.5 * np.sum(a * H) + b @ g)
    zz = z.astype(dtype)
    d1 = _fd_terms(f, zz, b, dtype(h), dtype)
    if not extrapolate:
        return float(d1)
    d2 = _fd_terms(f, zz, b, dtype(2 * h), dtype)
    return float((4 * d1 - d2) / 3)


# ----------------------------------------------------------- ranked-state sampler


class RankedSampler:
    """Ranked, unit-mass states of ``K`` atoms for sup-norm estimation.

    Mixture of deterministic adversarial states (uniform on the first ``k``
    atoms for a grid of ``k`` including ``k = K``, and geometric profiles)
    followed by random draws split between ranked GEM(theta, alpha) sticks
    (first ``K`` sticks, renormalized) and ranked Dirichlet vectors with
    concentrations ``0.1``, ``1`` and ``10``. The adversarial block comes
    first, so even small ``n`` covers the high-entropy states where the
    ``m = 2`` correction peaks.
    """

    def __init__(self, params: Params, n_uniform: int = 64, n_geometric: int = 32):
        self.params = params
        self.n_uniform = n_uniform
        self.n_geometric = n_geometric

    def adversarial(self, K: int) -> np.ndarray:
        ks = np.unique(np.concatenate([
            np.arange(1, min(K, 16) + 1),
            np.round(np.geomspace(1, K, self.n_uniform)).astype(int),
            np.arange(max(1, K - 8), K + 1),
        ]))
        uni = (np.arange(K)[None, :] < ks[:, None]) / ks[:, None]
        q = 1.0 - np.geomspace(1.0 / K, 0.9, self.n_geometric)
        geo = q[:, None] ** np.arange(K)[None, :]
        geo /= geo.sum(axis=1, keepdims=True)
        return np.concatenate([uni[::-1], geo])

    def __call__(self, K: int, n: int, rng) -> np.ndarray:
        from .oracle import gem_sticks

        adv = self.adversarial(K)[:n]
        n_rand = n - adv.shape[0]
        parts = [adv]
        if n_rand > 0:
            n_gem = n_rand // 2
            if n_gem:
                w, _ = gem_sticks(self.params, K, rng, size=n_gem)
                parts.append(w)
            n_dir = n_rand - n_gem
            conc = np.array([0.1, 1.0, 10.0])[np.arange(n_dir) % 3]
            g = rng.standard_gamma(np.repeat(conc[:, None], K, axis=1))
            parts.append(g)
        z = np.concatenate(parts)
        z = z / z.sum(axis=1, keepdims=True)
        return rank(z)


# ---------------------------------------------------------------- gap analysis


def gap_bound(m: float, K: int, params: Params) -> float:
    """``(m/2)(theta+alpha)/(K-1) + (m/2) alpha (1+2e^2) K ((m-1)/(K+m-1))^(m-1)``."""
    mu = params.theta + params.alpha
    return m / 2 * mu / (K - 1) + m / 2 * params.alpha * (1 + 2 * E2) * K * ((m - 1) / (K + m - 1)) ** (m - 1)


def sup_gap(m: float, K: int, params: Params, sampler=None, n: int = 10_000, rng=None,
            chunk: int = 4096) -> float:
    """Largest ``|B_K phi_m - B phi_m|`` over ``n`` sampled ranked states.

    A lower bound for the sup norm of the generator gap.
    """
    from .rng import as_rng

    if m < 2 or n < 1:
        raise DomainError("need m >= 2 and n >= 1")
    sampler = sampler or RankedSampler(params)
    z = sampler(K, n, as_rng(rng))
    best = 0.0
    for lo in range(0, z.shape[0], chunk):
        g = BK_correction(z[lo:lo + chunk], m, params, K)
        best = max(best, float(np.max(np.abs(g))))
    return best


@dataclass
class GapReport:
    m: float
    K_values: list
    sup_gaps: list
    bounds: list
    fit_slope: float
    fit_intercept: float
    r2: float
    sample_size: int

    @property
    def non_vanishing(self) -> bool:
        """Flat decay: the fitted slope is within 0.1 of zero."""
        return abs(self.fit_slope) < 0.1

    def rows(self):
        return [(K, self.m, g, b) for K, g, b in zip(self.K_values, self.sup_gaps, self.bounds)]


def fit_gap_rate(m: float, K_values, params: Params, sampler=None, n: int = 10_000,
                 rng=None) -> GapReport:
    """Sup-gap sweep over ``K_values`` with a log-log slope fit."""
    from .rng import as_rng

    K_values = [int(k) for k in K_values]
    if len(set(K_values)) < 4:
        raise InsufficientData("need at least 4 distinct K values for a rate fit")
    rng = as_rng(rng)
    gaps = [sup_gap(m, K, params, sampler, n, rng) for K in K_values]
    slope, icpt, r2 = loglog_fit(K_values, gaps)
    return GapReport(m, K_values, gaps, [gap_bound(m, K, params) for K in K_values], slope, icpt, r2, n)


def apriori_inequality_check(z, m: float, params: Params, K: int, tol: float = 1e-10):
    """Lower bound on ``B_K (phi_2 - phi_m)`` for ``2 < m < 3``.

    Returns ``(lhs, rhs, holds)`` where ``lhs = B_K phi_2 - B_K phi_m`` and
    ``rhs = 1 - alpha - m(m-1-alpha)/2 phi_{m-1} - [(1+theta) phi_2
    - m(m-1+theta)/2 phi_m] - [3(theta+alpha)/(2(K-1)) + alpha(1+2e^2)/(2(K+1))]``.
    """
    if not 2 < m < 3:
        raise DomainError(f"the inequality is stated for 2 < m < 3, got m={m}")
    z = _ranked_input(z, K)
    th, al = params.theta, params.alpha
    lhs = BK_phi_m(z, 2, params, K) - BK_phi_m(z, m, params, K)
    rhs = (1 - al - m * (m - 1 - al) / 2 * power_sum(z, m - 1)
           - ((1 + th) * power_sum(z, 2) - m * (m - 1 + th) / 2 * power_sum(z, m))
           - (3 * (th + al) / (2 * (K - 1)) + al * (1 + 2 * E2) / (2 * (K + 1))))
    holds = lhs >= rhs - tol
    if np.ndim(lhs) == 0:
        return float(lhs), float(rhs), bool(holds)
    return lhs, rhs, holds


def mass_deficit_statistic(path, dt: float | None = None, times=None) -> float:
    """Trapezoidal time integral of ``1 - sum_i z_i(t)`` along a ranked path.

    ``path`` has shape ``(T, J)``; give either a uniform step ``dt`` or the
    sample ``times``.
    """
    path = np.asarray(path, dtype=float)
    deficit = 1.0 - path.sum(axis=-1)
    if times is None:
        if dt is None:
            raise DomainError("need dt or times")
        times = dt * np.arange(path.shape[0])
    if path.shape[0] < 2:
        return 0.0
    return float(np.trapezoid(deficit, np.asarray(times, dtype=float), axis=0))


def uniform_bound_constant(m: float, params: Params, K_values) -> float:
    """Explicit bound on ``sup_K ||B_K phi_m||`` assembled from the two facts."""
    mu = params.theta + params.alpha
    tail = max(K * ((m - 1) / (K + m - 1)) ** (m - 1) for K in K_values)
    return m * (m - 1) / 2 + m / 2 * mu + m / 2 * mu + m / 2 * params.alpha * (1 + 2 * E2) * tail


__all__ = [
    "power_sum", "phi", "PhiProduct", "carre_du_champ", "carre_du_champ_direct",
    "B_phi_m", "B_phi_product", "BK_correction", "BK_phi_m", "BK_phi_m_from_drift",
    "BK_phi_product", "apply_A_K", "RankedSampler", "gap_bound", "sup_gap", "GapReport",
    "fit_gap_rate", "apriori_inequality_check", "mass_deficit_statistic", "uniform_bound_constant",
]

_ = math  # keep import for downstream users doing math on reports
