"""Closed-form laws of ordered default times without decay.

Under independent thresholds and d = 0 the gaps between consecutive
defaults are independent exponentials: the gap before the (j+1)-th default
has rate a * beta_j with beta_j = (n - j)(1 + j c). The k-th default time is
therefore hypoexponential with rates a * beta_0, ..., a * beta_{k-1}.

Distinct rates use the partial-fraction form

    f(t) = sum_j alpha_{k,j} a exp(-beta_j a t),
    alpha_{k,j} = beta_j prod_{m != j} beta_m / (beta_m - beta_j).

Coinciding rates (for instance c = 1/(n-1)) or badly conditioned
coefficients fall back to the phase-type representation of the same
convolution, evaluated with a matrix exponential.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from src.contagion_engine import IntensityParams
from src.errors import ConfigurationError, UnsupportedModelError

logger = logging.getLogger(__name__)

# Two rates closer than this (relative) count as equal
RATE_COLLISION_TOLERANCE = 1e-9
# Beyond this sum of |coefficients| the partial fractions lose too many digits
CONDITIONING_LIMIT = 1e8


def beta(j: int, n: int, c: float) -> float:
    """Gap-rate multiplier (n - j)(1 + j c) after j defaults"""
    if not 0 <= j <= n - 1:
        raise ConfigurationError(f"index j must lie in [0, {n - 1}], got {j}", field='j')
    return (n - j) * (1.0 + j * c)


@dataclass
class HypoexpDensity:
    """Law of a sum of independent exponentials.

    ``rates`` are the a * beta_j; ``coeffs`` the alpha_{k,j} * a (or None when
    rates collide and the phase-type form is used instead).
    """

    rates: np.ndarray
    coeffs: Optional[np.ndarray] = None

    @property
    def uses_partial_fractions(self) -> bool:
        return self.coeffs is not None

    @classmethod
    def from_rates(cls, rates: np.ndarray) -> 'HypoexpDensity':
        rates = np.asarray(rates, dtype=float)
        k = len(rates)
        weights = np.ones(k)
        for j in range(k):
            for m in range(k):
                if m == j:
                    continue
                gap = rates[m] - rates[j]
                if abs(gap) < RATE_COLLISION_TOLERANCE * max(rates[m], rates[j]):
                    return cls(rates=rates)
                weights[j] *= rates[m] / gap
        if np.sum(np.abs(weights)) > CONDITIONING_LIMIT:
            logger.debug(f"partial fractions ill-conditioned for {k} rates; using phase-type form")
            return cls(rates=rates)
        return cls(rates=rates, coeffs=weights * rates)

    def _subgenerator(self) -> np.ndarray:
        k = len(self.rates)
        generator = np.diag(-self.rates)
        generator[np.arange(k - 1), np.arange(1, k)] = self.rates[:-1]
        return generator

    def _transient(self, t: float) -> np.ndarray:
        # Probabilities of still being in each phase at time t, starting in phase 0
        return expm(self._subgenerator() * t)[0]

    def _phase_type(self, times: np.ndarray, absorbed: bool) -> np.ndarray:
        values = []
        for t in times.ravel():
            transient = self._transient(t)
            values.append(1.0 - np.sum(transient) if absorbed else transient[-1] * self.rates[-1])
        return np.array(values).reshape(times.shape)

    def pdf(self, t):
        """Density at ``t`` (scalar or array); zero for negative times"""
        times = np.asarray(t, dtype=float)
        clipped = np.maximum(times, 0.0)
        if self.uses_partial_fractions:
            values = np.exp(-np.multiply.outer(clipped, self.rates)) @ self.coeffs
        else:
            values = self._phase_type(clipped, absorbed=False)
        values = np.where(times < 0, 0.0, values)
        return float(values) if values.ndim == 0 else values

    def cdf(self, t):
        """Distribution function at ``t`` (scalar or array), clipped to [0, 1]"""
        times = np.asarray(t, dtype=float)
        clipped = np.maximum(times, 0.0)
        if self.uses_partial_fractions:
            values = -np.expm1(-np.multiply.outer(clipped, self.rates)) @ (self.coeffs / self.rates)
        else:
            values = self._phase_type(clipped, absorbed=True)
        values = np.where(times <= 0, 0.0, np.clip(values, 0.0, 1.0))
        return float(values) if values.ndim == 0 else values


def _check_model(k: int, n: int, p: IntensityParams):
    if p.d_infinite or p.d != 0:
        raise UnsupportedModelError(
            f"analytic densities hold only for d = 0, got d = {p.decay_label}")
    if n < 1:
        raise ConfigurationError(f"need at least one name, got {n}", field='n')
    if not 1 <= k <= n:
        raise ConfigurationError(f"order k must lie in [1, {n}], got {k}", field='k')


def hypoexp_for(k: int, n: int, p: IntensityParams) -> HypoexpDensity:
    """Law of the k-th default time among n names (product copula, d = 0)"""
    _check_model(k, n, p)
    rates = np.array([p.a * beta(j, n, p.c) for j in range(k)])
    return HypoexpDensity.from_rates(rates)


def density_tau_k(k: int, t: float, n: int, p: IntensityParams) -> float:
    """Density of the k-th default time at ``t``"""
    return hypoexp_for(k, n, p).pdf(t)


def cdf_tau_k(k: int, T: float, n: int, p: IntensityParams) -> float:
    """P(tau_k <= T)"""
    return hypoexp_for(k, n, p).cdf(T)
