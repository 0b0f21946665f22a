"""Ground truth for stationary comparisons.

Two independent routes: a stick-breaking sampler for the two-parameter
Poisson-Dirichlet law, and the closed-form moments ``E[phi_m]`` that make
the expected generator vanish.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, NonTermination, Params
from .rng import as_rng

BLOCK = 64


@dataclass(frozen=True)
class PdSample:
    """Top ``J`` ranked atoms of one draw plus the mass of everything else."""

    ranked_freqs: np.ndarray
    tail_mass: float
    n_sticks: int

    @property
    def J(self) -> int:
        return self.ranked_freqs.size


def _stick_params(params: Params, start: int, stop: int):
    i = np.arange(start + 1, stop + 1, dtype=float)
    return 1.0 - params.alpha, params.theta + i * params.alpha


def gem_sticks(params: Params, n_sticks: int, rng, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """First ``n_sticks`` size-biased atoms ``W_i = V_i prod_{j<i} (1 - V_j)``.

    ``V_i ~ Beta(1 - alpha, theta + i alpha)``. Returns ``(W, residual)`` with
    ``W`` of shape ``(size, n_sticks)`` (or ``(n_sticks,)``) and ``residual``
    the unassigned mass ``prod (1 - V_j)``.
    """
    rng = as_rng(rng)
    a, b = _stick_params(params, 0, n_sticks)
    shape = (n_sticks,) if size is None else (size, n_sticks)
    v = rng.beta(a, b, size=shape)
    # cumulative log of remaining mass avoids underflow of long products
    with np.errstate(divide="ignore"):
        log_rest = np.cumsum(np.log1p(-v), axis=-1)
    rest_before = np.exp(np.concatenate([np.zeros(shape[:-1] + (1,)), log_rest[..., :-1]], axis=-1))
    return v * rest_before, np.exp(log_rest[..., -1])


def sample_pd(params: Params, J: int, rng=None, *, mass_tol: float = 1e-12,
              max_sticks: int = 10**6, residual_tol: float = 1e-6) -> PdSample:
    """One ranked draw, truncated to its ``J`` largest atoms.

    Sticks are drawn in blocks until the unassigned mass drops below
    ``mass_tol`` or the top ``J`` are certified exact (no undrawn atom can
    exceed the unassigned mass, so once that mass is below the ``J``-th
    largest atom the top ``J`` cannot change). ``tail_mass`` is exactly one
    minus the top-``J`` total.

    Raises
    ------
    NonTermination
        If neither condition holds after ``max_sticks`` sticks and the
        residual is still above ``residual_tol``.
    """
    if J < 1:
        raise DomainError("J must be >= 1")
    rng = as_rng(rng)
    atoms = []
    log_rest = 0.0
    n = 0
    top = np.empty(0)
    while True:
        k = min(max(BLOCK, J), max_sticks - n)
        a, b = _stick_params(params, n, n + k)
        v = rng.beta(a, b)
        with np.errstate(divide="ignore"):
            # a stick of exactly 1 leaves no mass: log residual -inf
            lr = log_rest + np.cumsum(np.log1p(-v))
        before = np.exp(np.concatenate([[log_rest], lr[:-1]]))
        atoms.append(v * before)
        log_rest = float(lr[-1])
        n += k
        top = np.concatenate([top, atoms[-1]])
        top = -np.sort(-top)[:J]
        residual = np.exp(log_rest)
        certified = top.size == J and residual <= top[-1]
        if residual < mass_tol or certified:
            break
        if n >= max_sticks:
            if residual > residual_tol:
                raise NonTermination(
                    f"unassigned mass {residual:.3g} after {n} sticks (theta={params.theta}, alpha={params.alpha})"
                )
            break
    top = np.concatenate([top, np.zeros(J - top.size)])
    drawn = np.concatenate(atoms)
    tail = residual + (drawn.sum() - top.sum())
    return PdSample(top, float(max(tail, 0.0)), n)


def sample_pd_many(params: Params, J: int, n: int, rng=None, **kw) -> tuple[np.ndarray, np.ndarray]:
    """``n`` independent draws: arrays of top-``J`` atoms ``(n, J)`` and tail masses."""
    rng = as_rng(rng)
    draws = [sample_pd(params, J, rng, **kw) for _ in range(n)]
    return np.stack([d.ranked_freqs for d in draws]), np.array([d.tail_mass for d in draws])


def pd_power_sums(params: Params, ms, n: int, rng=None, *, n_sticks: int | None = None,
                  mass_tol: float = 1e-12, max_sticks: int = 1000, chunk: int = 2000) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo draws of ``phi_m = sum_i W_i^m`` for each ``m`` in ``ms``.

    Each draw uses the first ``n_sticks`` sticks, or, if ``n_sticks`` is None,
    as many blocks as needed for every draw in a chunk to leave less than
    ``mass_tol`` unassigned, capped at ``max_sticks``. Returns
    ``(values, residual)``, shapes ``(n, len(ms))`` and ``(n,)``.

    The omitted atoms are the residual mass ``R`` broken by a
    GEM(theta + M alpha, alpha) stick process after ``M`` sticks, so their
    contribution to ``phi_m`` is of order ``R^m (1 - alpha) / (M alpha)``;
    for ``alpha`` near one ``R`` stays large but this stays negligible.
    """
    rng = as_rng(rng)
    ms = np.atleast_1d(np.asarray(ms, dtype=float))
    vals = np.zeros((n, ms.size))
    resid = np.empty(n)
    cap = n_sticks if n_sticks is not None else max_sticks
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        log_rest = np.zeros(hi - lo)
        acc = np.zeros((hi - lo, ms.size))
        done = 0
        while done < cap:
            k = min(BLOCK * 4, cap - done)
            a, b = _stick_params(params, done, done + k)
            v = rng.beta(a, b, size=(hi - lo, k))
            with np.errstate(divide="ignore"):
                lr = log_rest[:, None] + np.cumsum(np.log1p(-v), axis=1)
            before = np.exp(np.concatenate([log_rest[:, None], lr[:, :-1]], axis=1))
            w = v * before
            acc += np.stack([np.sum(w**m, axis=1) for m in ms], axis=1)
            log_rest = lr[:, -1]
            done += k
            if n_sticks is None and np.all(np.exp(log_rest) < mass_tol):
                break
        vals[lo:hi] = acc
        resid[lo:hi] = np.exp(log_rest)
    return vals, resid


def stationary_moment(m: int, params: Params) -> float:
    """``E[phi_m] = prod_{k=2}^m (k - 1 - alpha) / (k - 1 + theta)`` under PD(theta, alpha)."""
    if int(m) != m or m < 1:
        raise DomainError("m must be an integer >= 1")
    out = 1.0
    for k in range(2, int(m) + 1):
        out *= (k - 1 - params.alpha) / (k - 1 + params.theta)
    return out
