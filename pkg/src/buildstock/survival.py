"""Normal-distribution lifetimes: CDF, annual demolition hazard, Monte-Carlo check.

Hazards are computed from the survival function ``S(T) = 1 - P(T)`` evaluated
with ``erfc``, so ``(P_T - P_{T-1}) / (1 - P_{T-1})`` stays accurate far into
the upper tail where ``P`` rounds to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import InvalidParameterError, LifetimeDistribution

_SQRT2 = math.sqrt(2.0)
_BELOW_ONE = math.nextafter(1.0, 0.0)

MIN_MC_SAMPLES = 10_000
HORIZON_SIGMAS = 5


def _upper_tail(t: float, dist: LifetimeDistribution) -> float:
    return 0.5 * math.erfc((t - dist.mean) / (dist.std_dev * _SQRT2))


def _survival(t: float, dist: LifetimeDistribution, truncate: bool) -> float:
    s = _upper_tail(t, dist)
    if truncate:
        s /= _upper_tail(0.0, dist)
    return min(s, 1.0)


def lifetime_cdf(t: float, dist: LifetimeDistribution, truncate: bool = False) -> float:
    """Probability that a building has retired by age ``t``.

    With ``truncate`` the distribution is renormalised to ages >= 0, so the CDF
    at 0 is exactly 0. The result is clamped to [0, 1).
    """
    if t < 0:
        raise InvalidParameterError(f"age must be >= 0, got {t!r}")
    p = 1.0 - _survival(t, dist, truncate)
    return min(max(p, 0.0), _BELOW_ONE)


def demolition_hazard(t: int, dist: LifetimeDistribution, truncate: bool = False) -> float:
    """Share of the floorspace surviving to age ``t - 1`` that is demolished at age ``t``.

    Beyond roughly 37 standard deviations above the mean the survival
    function underflows in double precision and the hazard is reported as 1.
    """
    if t < 1:
        raise InvalidParameterError(f"hazard age must be >= 1, got {t!r}")
    s_prev = _survival(t - 1, dist, truncate)
    if s_prev <= 0.0:
        return 1.0
    h = 1.0 - _survival(t, dist, truncate) / s_prev
    return min(max(h, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class HazardTable:
    """Hazards by integer age 0..horizon; age 0 never demolishes, the last age always does."""

    distribution: LifetimeDistribution
    cumulative: np.ndarray
    hazards: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.hazards) - 1

    def hazard(self, age: int) -> float:
        if age < 0:
            raise InvalidParameterError(f"negative age {age}")
        if age > self.horizon:
            return 1.0
        return float(self.hazards[age])

    def retirement_profile(self) -> np.ndarray:
        """Fraction of a unit cohort demolished at each age."""
        alive = np.concatenate(([1.0], np.cumprod(1.0 - self.hazards)[:-1]))
        return alive * self.hazards

    @classmethod
    def from_hazards(cls, distribution: LifetimeDistribution, hazards: Sequence[float]) -> "HazardTable":
        """Table from explicit hazards indexed by age (``hazards[0]`` is age 0)."""
        h = np.asarray(hazards, dtype=float)
        if h.ndim != 1 or h.size < 2:
            raise InvalidParameterError("need hazards for at least ages 0 and 1")
        if np.any((h < 0) | (h > 1)):
            raise InvalidParameterError("hazards must lie in [0, 1]")
        h = h.copy()
        h[-1] = 1.0
        cum = 1.0 - np.cumprod(1.0 - h)
        return cls(distribution, cum, h)


@lru_cache(maxsize=512)
def build_hazard_table(dist: LifetimeDistribution, truncate: bool = False) -> HazardTable:
    horizon = math.ceil(dist.mean + HORIZON_SIGMAS * dist.std_dev)
    cumulative = np.array([lifetime_cdf(t, dist, truncate) for t in range(horizon + 1)])
    hazards = np.zeros(horizon + 1)
    for t in range(1, horizon + 1):
        hazards[t] = demolition_hazard(t, dist, truncate)
    hazards[-1] = 1.0
    cumulative.setflags(write=False)
    hazards.setflags(write=False)
    return HazardTable(dist, cumulative, hazards)


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    samples: np.ndarray  # sorted lifetimes

    @property
    def n(self) -> int:
        return self.samples.size

    def __call__(self, t: float) -> float:
        return float(np.searchsorted(self.samples, t, side="right")) / self.n

    @property
    def median(self) -> float:
        return float(np.median(self.samples))

    def standard_error(self, t: float) -> float:
        p = self(t)
        return math.sqrt(max(p * (1.0 - p), 1e-300) / self.n)


def monte_carlo_survival(
    dist: LifetimeDistribution, n_samples: int, seed: int, truncate: bool = False
) -> EmpiricalCDF:
    """Empirical CDF of sampled lifetimes; with ``truncate`` negative draws are redrawn."""
    if n_samples < MIN_MC_SAMPLES:
        raise InvalidParameterError(f"need at least {MIN_MC_SAMPLES} samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    draws = rng.normal(dist.mean, dist.std_dev, n_samples)
    bad = draws < 0 if truncate else np.zeros(0, dtype=bool)
    while bad.any():
        draws[bad] = rng.normal(dist.mean, dist.std_dev, int(bad.sum()))
        bad = draws < 0
    draws.sort()
    return EmpiricalCDF(draws)


def max_oracle_deviation(
    dist: LifetimeDistribution, n_samples: int = 1_000_000, seed: int = 0, truncate: bool = False
) -> tuple[float, dict[float, tuple[float, float]]]:
    """Largest |analytic - empirical| CDF gap at mean - sd, mean, mean + sd."""
    ecdf = monte_carlo_survival(dist, n_samples, seed, truncate)
    points = {}
    for t in (dist.mean - dist.std_dev, dist.mean, dist.mean + dist.std_dev):
        points[t] = (lifetime_cdf(t, dist, truncate), ecdf(t))
    worst = max(abs(a - b) for a, b in points.values())
    return worst, points
