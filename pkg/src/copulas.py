"""Correlated uniforms for the default-time thresholds.

Three dependence structures are supported: independent names (product
copula), the common-shock exponential copula that produces simultaneous
defaults, and the one-factor Gaussian copula. Uniforms are turned into
sorted standard-exponential thresholds E* which drive the total hazard
construction in ``src.contagion_engine``.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np
from scipy.special import ndtr

from src.errors import ConfigurationError, PricerError

logger = logging.getLogger(__name__)

# Uniforms are clamped to [EPSILON, 1 - EPSILON] so thresholds stay finite
EPSILON = 1e-15


class CopulaKind(str, Enum):
    PRODUCT = 'product'
    EXPONENTIAL = 'exponential'
    GAUSSIAN = 'gaussian'


@dataclass(frozen=True)
class CopulaSpec:
    """Tagged copula choice.

    ``c0`` is the rate of the common shock and ``c1`` the rate of each
    idiosyncratic shock (exponential copula only); ``rho`` is the factor
    loading of the one-factor Gaussian copula.
    """

    kind: CopulaKind
    c0: float = 0.0
    c1: float = 0.0
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', CopulaKind(self.kind))
        if self.kind is CopulaKind.EXPONENTIAL:
            if not self.c0 > 0:
                raise ConfigurationError(f"must be positive, got {self.c0}", field='copula.c0')
            if not self.c1 > 0:
                raise ConfigurationError(f"must be positive, got {self.c1}", field='copula.c1')
        if self.kind is CopulaKind.GAUSSIAN and not abs(self.rho) <= 1:
            raise ConfigurationError(f"|rho| must be at most 1, got {self.rho}", field='copula.rho')

    @classmethod
    def product(cls) -> 'CopulaSpec':
        return cls(CopulaKind.PRODUCT)

    @classmethod
    def exponential(cls, c0: float, c1: float) -> 'CopulaSpec':
        return cls(CopulaKind.EXPONENTIAL, c0=c0, c1=c1)

    @classmethod
    def gaussian(cls, rho: float) -> 'CopulaSpec':
        return cls(CopulaKind.GAUSSIAN, rho=rho)

    @property
    def label(self) -> str:
        if self.kind is CopulaKind.EXPONENTIAL:
            return f"exponential(c0={self.c0}, c1={self.c1})"
        if self.kind is CopulaKind.GAUSSIAN:
            return f"gaussian(rho={self.rho})"
        return 'product'

    def to_dict(self) -> Dict:
        if self.kind is CopulaKind.EXPONENTIAL:
            return {'kind': self.kind.value, 'c0': self.c0, 'c1': self.c1}
        if self.kind is CopulaKind.GAUSSIAN:
            return {'kind': self.kind.value, 'rho': self.rho}
        return {'kind': self.kind.value}

    def tie_probability(self) -> float:
        """Probability that two given names share the same uniform"""
        if self.kind is CopulaKind.EXPONENTIAL:
            return self.c0 / (self.c0 + 2 * self.c1)
        if self.kind is CopulaKind.GAUSSIAN and abs(self.rho) == 1:
            return 1.0
        return 0.0


def _clamp(u: np.ndarray) -> np.ndarray:
    return np.clip(u, EPSILON, 1.0 - EPSILON)


@dataclass(frozen=True)
class CopulaDraw:
    """Uniforms of one batch plus the per-path variable all names share.

    ``shared`` is the Gaussian factor Z or the common shock time T_0, and
    None for the product copula.
    """

    u: np.ndarray
    shared: Optional[np.ndarray] = None


def sample_copula_batch(spec: CopulaSpec, paths: int, n: int,
                        rng: np.random.Generator) -> CopulaDraw:
    """Draw ``paths`` independent copula vectors of dimension ``n``.

    Args:
        spec: Copula to sample from
        paths: Number of rows (simulated paths)
        n: Number of names per path
        rng: Generator owned by the caller's sub-stream

    Returns:
        CopulaDraw whose ``u`` has shape (paths, n) with entries in
        [EPSILON, 1 - EPSILON]
    """
    if n < 1:
        raise ConfigurationError(f"need at least one name, got {n}", field='n_names')

    shared = None
    if spec.kind is CopulaKind.PRODUCT:
        u = rng.random((paths, n))

    elif spec.kind is CopulaKind.EXPONENTIAL:
        # S_i = min(T_0, T_i) with T_0 ~ Exp(c0), T_i ~ Exp(c1); S_i ~ Exp(c0 + c1)
        common = rng.exponential(1.0 / spec.c0, size=paths)
        own = rng.exponential(1.0 / spec.c1, size=(paths, n))
        first_jump = np.minimum(common[:, None], own)
        shared = common
        u = -np.expm1(-(spec.c0 + spec.c1) * first_jump)

    else:
        factor = rng.standard_normal(paths)
        idiosyncratic = rng.standard_normal((paths, n))
        loading = math.sqrt(max(0.0, 1.0 - spec.rho * spec.rho))
        x = spec.rho * factor[:, None] + loading * idiosyncratic
        u = ndtr(x)
        shared = factor

    return CopulaDraw(u=_clamp(u), shared=shared)


def sample_uniforms_batch(spec: CopulaSpec, paths: int, n: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Uniforms only, shape (paths, n)"""
    return sample_copula_batch(spec, paths, n, rng).u


def extra_name_uniforms(spec: CopulaSpec, draw: CopulaDraw,
                        rng: np.random.Generator) -> np.ndarray:
    """Uniform of one more name joined to every path of ``draw``.

    The extra name loads on the same factor (or common shock) as the
    portfolio; its own idiosyncratic part comes from ``rng``.
    """
    paths = draw.u.shape[0]
    if spec.kind is CopulaKind.PRODUCT:
        u = rng.random(paths)
    elif spec.kind is CopulaKind.EXPONENTIAL:
        own = rng.exponential(1.0 / spec.c1, size=paths)
        u = -np.expm1(-(spec.c0 + spec.c1) * np.minimum(draw.shared, own))
    else:
        loading = math.sqrt(max(0.0, 1.0 - spec.rho * spec.rho))
        u = ndtr(spec.rho * draw.shared + loading * rng.standard_normal(paths))
    return _clamp(u)


def sample_uniforms(spec: CopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one copula vector of dimension ``n``"""
    return sample_uniforms_batch(spec, 1, n, rng)[0]


def to_sorted_thresholds(u: np.ndarray) -> np.ndarray:
    """Map uniforms to E = -ln(1 - U) and sort along the last axis.

    The sort is stable so tied thresholds (simultaneous defaults) stay
    adjacent. Works on a single vector or a (paths, n) batch.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise PricerError("uniforms must lie strictly inside (0, 1); clamp before transforming")
    thresholds = -np.log1p(-u)
    return np.sort(thresholds, axis=-1, kind='stable')
