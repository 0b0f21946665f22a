"""Parameters, simplex state types and the ranking map.

Every other module works on plain ``numpy`` arrays whose last axis holds the
allele frequencies; the dataclasses here are validated, immutable wrappers
used at API boundaries.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

SIMPLEX_TOL = 1e-12


class WFPDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(WFPDError, ValueError):
    pass


class DomainError(WFPDError, ValueError):
    pass


class InvalidPopulationSize(WFPDError, ValueError):
    pass


class NumericalError(WFPDError, ArithmeticError):
    pass


class InsufficientData(WFPDError, ValueError):
    pass


class NonTermination(WFPDError, RuntimeError):
    pass


class Regime(str, enum.Enum):
    """Which migration/mutation construction is used.

    ``GENERAL`` needs ``theta > -alpha`` and mutates at rate ``theta + alpha``.
    ``THETA_NONNEG`` needs ``theta >= 0``; mutation is driven by ``theta``
    alone and ``alpha`` only enters through migration.
    """

    GENERAL = "general"
    THETA_NONNEG = "theta_nonneg"


@dataclass(frozen=True)
class Params:
    theta: float
    alpha: float
    regime: Regime = Regime.GENERAL

    def __post_init__(self):
        theta, alpha, regime = _check_params(self.theta, self.alpha, self.regime)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "regime", regime)

    @property
    def mutation_intensity(self) -> float:
        """Total mutation intensity: ``theta + alpha`` or ``theta``."""
        if self.regime is Regime.GENERAL:
            return self.theta + self.alpha
        return self.theta


def validate_params(theta: float, alpha: float, regime: Regime | str = Regime.GENERAL) -> Params:
    """Check the parameter constraints of ``regime`` and return a :class:`Params`.

    Raises
    ------
    InvalidParams
        Naming the violated constraint.
    """
    return Params(theta, alpha, regime)


def _check_params(theta, alpha, regime):
    try:
        regime = Regime(regime)
    except ValueError:
        raise InvalidParams(f"unknown regime {regime!r}") from None
    theta = float(theta)
    alpha = float(alpha)
    if not (np.isfinite(theta) and np.isfinite(alpha)):
        raise InvalidParams("theta and alpha must be finite")
    if not 0.0 <= alpha < 1.0:
        raise InvalidParams(f"need 0 <= alpha < 1, got alpha={alpha}")
    if regime is Regime.GENERAL and not theta > -alpha:
        raise InvalidParams(f"need theta > -alpha, got theta={theta}, alpha={alpha}")
    if regime is Regime.THETA_NONNEG and not theta >= 0.0:
        raise InvalidParams(f"need theta >= 0 in regime theta_nonneg, got theta={theta}")
    return theta, alpha, regime


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_simplex(freqs, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a frequency vector and renormalize away float noise.

    Inputs whose sum is off by more than ``tol`` are rejected.
    """
    z = np.array(freqs, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise DomainError("a simplex state needs a 1-d vector with K >= 2 entries")
    if not np.all(np.isfinite(z)) or np.any(z < 0):
        raise DomainError("frequencies must be finite and nonnegative")
    s = z.sum()
    if abs(s - 1.0) > tol:
        raise DomainError(f"frequencies sum to {s!r}, not 1")
    return z / s


@dataclass(frozen=True)
class SimplexState:
    """A point of the K-simplex (nonnegative frequencies summing to one)."""

    freqs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "freqs", _frozen(as_simplex(self.freqs)))

    @property
    def K(self) -> int:
        return self.freqs.size

    def __eq__(self, other):
        return isinstance(other, SimplexState) and np.array_equal(self.freqs, other.freqs)

    __hash__ = None


@dataclass(frozen=True)
class DiscreteSimplexState:
    """Allele counts of a population of size ``N``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size < 2:
            raise DomainError("counts must be a 1-d vector with K >= 2 entries")
        if not np.all(c == np.round(c)) or np.any(c < 0):
            raise DomainError("counts must be nonnegative integers")
        c = np.array(c, dtype=np.int64)
        if c.sum() <= 0:
            raise DomainError("population size must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def K(self) -> int:
        return self.counts.size

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / self.N

    def __eq__(self, other):
        return isinstance(other, DiscreteSimplexState) and np.array_equal(self.counts, other.counts)

    __hash__ = None


@dataclass(frozen=True)
class RankedState:
    """Nonincreasing frequencies, possibly with total mass below one.

    The infinite tail of zeros is implicit.
    """

    freqs: np.ndarray

    def __post_init__(self):
        z = np.array(self.freqs, dtype=float)
        if z.ndim != 1 or z.size < 1:
            raise DomainError("ranked state must be a nonempty 1-d vector")
        if not np.all(np.isfinite(z)) or np.any(z < 0):
            raise DomainError("frequencies must be finite and nonnegative")
        if np.any(np.diff(z) > 0):
            raise DomainError("ranked frequencies must be nonincreasing")
        if z.sum() > 1.0 + SIMPLEX_TOL:
            raise DomainError(f"ranked frequencies sum to {z.sum()!r} > 1")
        object.__setattr__(self, "freqs", _frozen(z))

    @property
    def K(self) -> int:
        return self.freqs.size

    @property
    def mass(self) -> float:
        return float(self.freqs.sum())

    def to_simplex(self) -> SimplexState:
        return SimplexState(self.freqs)

    def __eq__(self, other):
        return isinstance(other, RankedState) and np.array_equal(self.freqs, other.freqs)

    __hash__ = None


def freqs_of(z) -> np.ndarray:
    """Return the frequency array behind any state type or array-like."""
    if isinstance(z, (SimplexState, RankedState, DiscreteSimplexState)):
        return z.freqs
    return np.asarray(z, dtype=float)


def rank(z) -> np.ndarray:
    """Sort frequencies nonincreasing along the last axis (stable on ties)."""
    z = freqs_of(z)
    idx = np.argsort(-z, axis=-1, kind="stable")
    return np.take_along_axis(z, idx, axis=-1)


def rho_k(z) -> RankedState:
    """Descending order statistics of a simplex point, as a :class:`RankedState`."""
    if isinstance(z, RankedState):
        z = z.freqs
    z = freqs_of(z)
    as_simplex(z)
    # sort the raw values: renormalizing would make the result depend on summation order
    return RankedState(rank(z))


def is_ranked(z, tol: float = 0.0) -> bool:
    z = freqs_of(z)
    return bool(np.all(np.diff(z, axis=-1) <= tol))
