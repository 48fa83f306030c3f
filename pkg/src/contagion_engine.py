"""Ordered default times under the homogeneous contagion intensity.

Each surviving name carries the hazard

    lambda(t) = a * (1 + c * sum_j exp(-d * (t - tau_j)) * 1{tau_j <= t})

summed over names that already defaulted. With thresholds E* sorted
ascending, the k-th default time is the first t at which the accumulated
hazard reaches E*_k. For d = 0 this inverts in closed form, for d = inf (or
c = 0) contagion vanishes and tau_k = E*_k / a, and in between each default
time is the root of a strictly increasing concave function solved by
Newton's method started at the previous default.

Batch functions work on (paths, n) arrays; the single-path operations wrap
them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.errors import ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

NEWTON_MAX_ITERATIONS = 100
NEWTON_TOLERANCE = 1e-12
BISECTION_MAX_ITERATIONS = 200


@dataclass(frozen=True)
class IntensityParams:
    """Contagion triple (a, c, d).

    ``d`` is kept as a finite value together with an explicit ``d_infinite``
    flag; passing ``d=math.inf`` sets the flag.
    """

    a: float
    c: float = 0.0
    d: float = 0.0
    d_infinite: bool = False

    def __post_init__(self):
        if math.isinf(self.d) and self.d > 0:
            object.__setattr__(self, 'd_infinite', True)
        if self.d_infinite:
            object.__setattr__(self, 'd', math.inf)
        if not self.a > 0:
            raise ConfigurationError(f"must be positive, got {self.a}", field='intensity.a')
        if not self.c >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.c}", field='intensity.c')
        if not self.d >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.d}", field='intensity.d')

    @property
    def no_contagion(self) -> bool:
        """True when defaults never raise the survivors' hazard"""
        return self.c == 0 or self.d_infinite

    @property
    def decay_label(self) -> str:
        return 'inf' if self.d_infinite else f"{self.d:g}"

    def as_dict(self) -> Dict[str, float]:
        return {'a': self.a, 'c': self.c, 'd': self.d}


@dataclass(frozen=True)
class CounterpartyParams:
    """Counterparty hazard a_B * (1 + c_B * number of portfolio defaults).

    The counterparty threshold joins the portfolio copula as one more name
    unless ``independent`` is set, in which case it is a standard
    exponential independent of the portfolio.
    """

    a_B: float
    c_B: float = 0.0
    independent: bool = False

    def __post_init__(self):
        if not self.a_B > 0:
            raise ConfigurationError(f"must be positive, got {self.a_B}", field='counterparty.a_B')
        if not self.c_B >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.c_B}", field='counterparty.c_B')


@dataclass
class DefaultTimeline:
    """Ordered default times of one path, in years"""

    tau: np.ndarray
    counterparty_tau: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.tau)


@dataclass
class NamedDefaults:
    """Per-name default times with the order in which names defaulted"""

    times: np.ndarray
    order: List[int] = field(default_factory=list)

    def timeline(self) -> DefaultTimeline:
        return DefaultTimeline(tau=self.times[self.order])


def intensity(p: IntensityParams, defaulted: np.ndarray, s: float) -> float:
    """Hazard rate at time ``s`` of a name that has not defaulted yet.

    Names defaulting exactly at ``s`` do not contribute yet.
    """
    if p.no_contagion:
        return p.a
    prior = np.asarray(defaulted, dtype=float)
    prior = prior[prior < s]
    return p.a * (1.0 + p.c * float(np.sum(np.exp(-p.d * (s - prior)))))


def _no_decay_batch(p: IntensityParams, e: np.ndarray) -> np.ndarray:
    if p.c == 0:
        return e / p.a
    n = e.shape[-1]
    rates = p.a * (1.0 + p.c * np.arange(n))
    increments = np.diff(e, axis=-1, prepend=0.0) / rates
    return np.cumsum(increments, axis=-1)


def _decay_mass(d: float, gap: np.ndarray) -> np.ndarray:
    # (1 - exp(-d * gap)) / d, stable for tiny and huge d
    return -np.expm1(-d * gap) / d


def _with_decay_batch(p: IntensityParams, e: np.ndarray) -> np.ndarray:
    paths, n = e.shape
    a, c, d = p.a, p.c, p.d
    tau = np.empty_like(e)
    tau[:, 0] = e[:, 0] / a

    # Contagion state at the latest default tau_{k-1}:
    #   mass   = sum_i (1 - exp(-d (tau_{k-1} - tau_i))) / d
    #   weight = sum_i exp(-d (tau_{k-1} - tau_i))
    mass = np.zeros(paths)
    weight = np.zeros(paths)

    for j in range(1, n):
        prev = tau[:, j - 1]
        gap = prev - tau[:, j - 2] if j > 1 else np.zeros(paths)
        mass = mass + weight * _decay_mass(d, gap)
        weight = weight * np.exp(-d * gap) + 1.0

        target = e[:, j]

        def hazard_gap(t, rows):
            # F_k(t) and F_k'(t) restricted to ``rows``
            x = t - prev[rows]
            cumulative = a * t + a * c * (mass[rows] + weight[rows] * _decay_mass(d, x))
            slope = a + a * c * weight[rows] * np.exp(-d * x)
            return cumulative - target[rows], slope

        tau[:, j] = _solve_newton(hazard_gap, prev, target, e[:, j - 1], p, k=j + 1)

    return tau


def _solve_newton(hazard_gap, prev: np.ndarray, target: np.ndarray,
                  prev_target: np.ndarray, p: IntensityParams, k: int) -> np.ndarray:
    t = prev.copy()
    f_tol = NEWTON_TOLERANCE * np.maximum(1.0, target)
    active = np.arange(len(t))

    for _ in range(NEWTON_MAX_ITERATIONS):
        if active.size == 0:
            break
        f, slope = hazard_gap(t[active], active)
        converged = np.abs(f) < f_tol[active]
        t_new = np.maximum(t[active] - f / slope, prev[active])
        small_step = np.abs(t_new - t[active]) < NEWTON_TOLERANCE * np.maximum(1.0, t[active])
        t[active] = np.where(converged, t[active], t_new)
        active = active[~(converged | small_step)]

    if active.size:
        logger.warning(f"Newton did not converge for {active.size} paths at k={k}; bisecting")
        upper = prev[active] + (target[active] - prev_target[active]) / p.a + 1.0
        t[active] = _bisect(hazard_gap, active, prev[active], upper, p, k)

    return t


def _bisect(hazard_gap, rows: np.ndarray, lower: np.ndarray, upper: np.ndarray,
            p: IntensityParams, k: int) -> np.ndarray:
    lo = lower.copy()
    hi = upper.copy()
    f_hi, _ = hazard_gap(hi, rows)
    bad = ~(f_hi > 0)
    if np.any(bad):
        row = int(rows[np.argmax(bad)])
        raise NumericalError("bisection bracket does not contain the default time", k,
                             p.as_dict(), path_index=row)

    for _ in range(BISECTION_MAX_ITERATIONS):
        if np.all(hi - lo <= NEWTON_TOLERANCE * np.maximum(1.0, hi)):
            break
        mid = 0.5 * (lo + hi)
        f_mid, _ = hazard_gap(mid, rows)
        below = f_mid < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        unresolved = hi - lo > NEWTON_TOLERANCE * np.maximum(1.0, hi)
        row = int(rows[np.argmax(unresolved)])
        raise NumericalError("bisection did not converge", k, p.as_dict(), path_index=row)

    result = 0.5 * (lo + hi)
    if not np.all(np.isfinite(result)):
        row = int(rows[np.argmax(~np.isfinite(result))])
        raise NumericalError("non-finite default time", k, p.as_dict(), path_index=row)
    return result


def ordered_defaults_batch(p: IntensityParams, e: np.ndarray) -> np.ndarray:
    """Ordered default times for a (paths, n) array of sorted thresholds"""
    e = np.atleast_2d(np.asarray(e, dtype=float))
    if p.no_contagion:
        return e / p.a
    if p.d == 0:
        return _no_decay_batch(p, e)
    return _with_decay_batch(p, e)


def ordered_defaults_no_decay(p: IntensityParams, e: np.ndarray) -> DefaultTimeline:
    """Closed-form recursion tau_k = tau_{k-1} + (E*_k - E*_{k-1}) / (a (1 + (k-1) c))"""
    if p.d != 0:
        raise ConfigurationError(f"closed-form recursion needs d = 0, got {p.decay_label}",
                                 field='intensity.d')
    return DefaultTimeline(tau=_no_decay_batch(p, np.atleast_2d(np.asarray(e, dtype=float)))[0])


def ordered_defaults_with_decay(p: IntensityParams, e: np.ndarray) -> DefaultTimeline:
    """Newton solve of F_k(t) = 0 from tau_{k-1}, bisection as fallback"""
    if p.d_infinite or not p.d > 0:
        raise ConfigurationError(f"decay solver needs 0 < d < inf, got {p.decay_label}",
                                 field='intensity.d')
    return DefaultTimeline(tau=_with_decay_batch(p, np.atleast_2d(np.asarray(e, dtype=float)))[0])


def ordered_defaults(p: IntensityParams, e: np.ndarray) -> DefaultTimeline:
    """Dispatch on d = 0, 0 < d < inf and d = inf"""
    return DefaultTimeline(tau=ordered_defaults_batch(p, e)[0])


def default_times_by_name(p: IntensityParams, thresholds: np.ndarray) -> NamedDefaults:
    """Total hazard construction with name identities.

    At every step the surviving name whose accumulated hazard reaches its
    own (unsorted) threshold first defaults next. All survivors share the
    same hazard path, so each candidate time is the next ordered default of
    the already defaulted thresholds extended by that name's threshold.
    Lower name indices win ties.
    """
    thresholds = np.asarray(thresholds, dtype=float)
    n = len(thresholds)
    times = np.full(n, np.inf)
    order: List[int] = []
    defaulted_thresholds: List[float] = []

    for _ in range(n):
        best_name, best_time = -1, np.inf
        for name in range(n):
            if name in order:
                continue
            if defaulted_thresholds and thresholds[name] < defaulted_thresholds[-1]:
                continue
            candidate = ordered_defaults(p, np.array(defaulted_thresholds + [thresholds[name]])).tau[-1]
            if candidate < best_time:
                best_name, best_time = name, candidate
        order.append(best_name)
        defaulted_thresholds.append(float(thresholds[best_name]))
        times[best_name] = best_time

    return NamedDefaults(times=times, order=order)


def counterparty_default_times(cp: CounterpartyParams, tau: np.ndarray, e_B: np.ndarray) -> np.ndarray:
    """Invert the piecewise-linear counterparty cumulative hazard.

    Between the j-th and (j+1)-th portfolio default the counterparty hazard
    is a_B (1 + c_B j); the result may lie beyond the contract maturity.
    """
    tau = np.atleast_2d(np.asarray(tau, dtype=float))
    e_B = np.atleast_1d(np.asarray(e_B, dtype=float))
    paths, n = tau.shape

    knots = np.concatenate([np.zeros((paths, 1)), tau], axis=1)
    slopes = cp.a_B * (1.0 + cp.c_B * np.arange(n + 1))
    accrued = np.concatenate(
        [np.zeros((paths, 1)), np.cumsum(slopes[:n] * np.diff(knots, axis=1), axis=1)], axis=1
    )

    segment = np.sum(accrued <= e_B[:, None], axis=1) - 1
    rows = np.arange(paths)
    return knots[rows, segment] + (e_B - accrued[rows, segment]) / slopes[segment]


def counterparty_default_time(cp: CounterpartyParams, timeline: DefaultTimeline, e_B: float) -> float:
    """Counterparty default time for one path"""
    return float(counterparty_default_times(cp, timeline.tau[None, :], np.array([e_B]))[0])
