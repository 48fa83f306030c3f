"""Cash-flow legs of kth-to-default swaps and CDO tranches.

Leg functions take arrays of simulated default times and return per-path
present values per unit notional; the fee leg is quoted per unit swap rate
so that the fair rate is E[contingent] / E[fee].

Conventions:
  - a default exactly on a payment date t_i belongs to the period
    (t_{i-1}, t_i]; survival past t_i is the strict event tau > t_i.
  - tranche losses settle on payment dates only.
  - counterparty gating: the contingent CDS payment needs tau_B >= tau_k,
    the accrual needs tau_B > tau_k, and every period term needs
    tau_B > t_i.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.contagion_engine import DefaultTimeline
from src.errors import ConfigurationError, ContractMisuseError, DegenerateContractError


@dataclass(frozen=True)
class ContractTerms:
    """Maturity, payment grid t_1 < ... < t_N = T, recovery and flat rate"""

    maturity: float
    payment_dates: Tuple[float, ...]
    recovery: float
    rate: float

    def __post_init__(self):
        dates = tuple(float(t) for t in self.payment_dates)
        object.__setattr__(self, 'payment_dates', dates)
        if not self.maturity > 0:
            raise ConfigurationError(f"must be positive, got {self.maturity}", field='terms.maturity')
        if not dates:
            raise ConfigurationError("at least one payment date is required", field='terms.payments')
        if dates[0] <= 0 or any(b <= a for a, b in zip(dates, dates[1:])):
            raise ConfigurationError("payment dates must be positive and strictly increasing",
                                     field='terms.payments')
        if not math.isclose(dates[-1], self.maturity, rel_tol=1e-12, abs_tol=1e-12):
            raise ConfigurationError(f"last payment date {dates[-1]} must equal maturity {self.maturity}",
                                     field='terms.payments')
        if not 0 <= self.recovery <= 1:
            raise ConfigurationError(f"must lie in [0, 1], got {self.recovery}", field='terms.recovery')
        if not self.rate >= 0:
            raise ConfigurationError(f"must be non-negative, got {self.rate}", field='terms.rate')

    @classmethod
    def equally_spaced(cls, maturity: float, payments: int, recovery: float, rate: float) -> 'ContractTerms':
        if payments < 1:
            raise ConfigurationError(f"need at least one payment, got {payments}", field='terms.payments')
        dates = tuple(maturity * i / payments for i in range(1, payments + 1))
        return cls(maturity=maturity, payment_dates=dates, recovery=recovery, rate=rate)

    @property
    def dates(self) -> np.ndarray:
        return np.asarray(self.payment_dates)

    @property
    def previous_dates(self) -> np.ndarray:
        return np.concatenate([[0.0], self.dates[:-1]])

    @property
    def accruals(self) -> np.ndarray:
        return self.dates - self.previous_dates

    def discount(self, t) -> np.ndarray:
        """B(t) = exp(-r t)"""
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def annuity(self) -> float:
        """Fee leg of a contract that never stops paying"""
        return float(np.sum(self.accruals * self.discount(self.dates)))


@dataclass(frozen=True)
class TrancheSpec:
    """Attachment points 0 = k_0 < k_1 < ... < k_M = 1; tranches are 1-based"""

    attachments: Tuple[float, ...]

    def __post_init__(self):
        points = tuple(float(k) for k in self.attachments)
        object.__setattr__(self, 'attachments', points)
        if len(points) < 2 or points[0] != 0.0 or points[-1] != 1.0:
            raise ConfigurationError("attachments must start at 0 and end at 1", field='tranches.attachments')
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ConfigurationError("attachments must be strictly increasing", field='tranches.attachments')

    @property
    def count(self) -> int:
        return len(self.attachments) - 1

    def bounds(self, l: int) -> Tuple[float, float]:
        if not 1 <= l <= self.count:
            raise ConfigurationError(f"tranche index must lie in [1, {self.count}], got {l}", field='targets')
        return self.attachments[l - 1], self.attachments[l]

    def label(self, l: int) -> str:
        lo, hi = self.bounds(l)
        return f"{lo:g}-{hi:g}"


@dataclass(frozen=True)
class LegPair:
    contingent_pv: float
    fee_pv_per_unit_rate: float


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    paths: int
    seed: int


def cds_legs(tau_k: np.ndarray, terms: ContractTerms,
             counterparty_tau: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Per-path contingent and fee legs of a kth-to-default swap.

    Args:
        tau_k: k-th default time on each path
        terms: Contract terms
        counterparty_tau: Counterparty default time per path; None means
            the protection seller never defaults

    Returns:
        (contingent, fee_per_unit_rate) arrays
    """
    tau_k = np.asarray(tau_k, dtype=float)
    dates, previous, accruals = terms.dates, terms.previous_dates, terms.accruals
    discount_tau = terms.discount(tau_k)

    survives_date = tau_k[:, None] > dates
    in_period = (tau_k[:, None] > previous) & (tau_k[:, None] <= dates)
    contingent_paid = tau_k <= terms.maturity
    accrual_paid = np.ones_like(tau_k, dtype=bool)

    if counterparty_tau is not None:
        counterparty_tau = np.asarray(counterparty_tau, dtype=float)
        survives_date &= counterparty_tau[:, None] > dates
        contingent_paid &= counterparty_tau >= tau_k
        accrual_paid &= counterparty_tau > tau_k

    contingent = np.where(contingent_paid, (1.0 - terms.recovery) * discount_tau, 0.0)
    premium = survives_date.astype(float) @ (accruals * terms.discount(dates))
    accrued = np.sum(in_period * (tau_k[:, None] - previous), axis=1) * discount_tau
    fee = premium + np.where(accrual_paid, accrued, 0.0)
    return contingent, fee


def portfolio_losses(tau: np.ndarray, dates: np.ndarray, loss_scale: float = 1.0) -> np.ndarray:
    """Defaulted fraction of the portfolio at each date, shape (paths, len(dates))"""
    tau = np.atleast_2d(tau)
    n = tau.shape[1]
    defaults = np.sum(tau[:, :, None] <= np.asarray(dates)[None, None, :], axis=1)
    return loss_scale * defaults / n


def tranche_loss(L, lo: float, hi: float):
    """Tranche loss clamp(L - lo, 0, hi - lo); accepts scalars or arrays"""
    return np.clip(np.asarray(L, dtype=float) - lo, 0.0, hi - lo)


def cdo_legs_from_losses(losses: np.ndarray, lo: float, hi: float, terms: ContractTerms,
                         counterparty_alive: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Tranche legs from portfolio losses on the payment dates.

    Args:
        losses: (paths, N) portfolio loss fractions at t_1..t_N
        lo: Attachment point
        hi: Detachment point
        terms: Contract terms
        counterparty_alive: Optional (paths, N) indicator of tau_B > t_i

    Returns:
        (contingent, fee_per_unit_rate) arrays
    """
    tranche = tranche_loss(losses, lo, hi)
    settled = np.diff(tranche, axis=1, prepend=0.0)
    outstanding = (hi - lo) - tranche
    discount = terms.discount(terms.dates)
    if counterparty_alive is not None:
        settled = settled * counterparty_alive
        outstanding = outstanding * counterparty_alive
    contingent = settled @ discount
    fee = outstanding @ (terms.accruals * discount)
    return contingent, fee


def counterparty_alive_at(counterparty_tau: np.ndarray, terms: ContractTerms) -> np.ndarray:
    return np.asarray(counterparty_tau, dtype=float)[:, None] > terms.dates


def _kth(timeline: DefaultTimeline, k: int) -> float:
    if not 1 <= k <= timeline.n:
        raise ConfigurationError(f"order k must lie in [1, {timeline.n}], got {k}", field='targets')
    return float(timeline.tau[k - 1])


def _pair(legs: Tuple[np.ndarray, np.ndarray]) -> LegPair:
    return LegPair(contingent_pv=float(legs[0][0]), fee_pv_per_unit_rate=float(legs[1][0]))


def _require_counterparty(timeline: DefaultTimeline) -> float:
    if timeline.counterparty_tau is None:
        raise ContractMisuseError("counterparty-adjusted legs need a counterparty default time")
    return float(timeline.counterparty_tau)


def cds_legs_on_path(k: int, timeline: DefaultTimeline, terms: ContractTerms) -> LegPair:
    return _pair(cds_legs(np.array([_kth(timeline, k)]), terms))


def cds_legs_with_counterparty(k: int, timeline: DefaultTimeline, terms: ContractTerms) -> LegPair:
    counterparty_tau = _require_counterparty(timeline)
    return _pair(cds_legs(np.array([_kth(timeline, k)]), terms, np.array([counterparty_tau])))


def portfolio_loss(timeline: DefaultTimeline, t: float, n: Optional[int] = None) -> float:
    """Fraction of the n names defaulted by time t (right-continuous)"""
    n = n or timeline.n
    return float(np.sum(timeline.tau <= t)) / n


def cdo_legs_on_path(l: int, timeline: DefaultTimeline, terms: ContractTerms, tranches: TrancheSpec,
                     loss_given_default_scaling: bool = False) -> LegPair:
    lo, hi = tranches.bounds(l)
    scale = 1.0 - terms.recovery if loss_given_default_scaling else 1.0
    losses = portfolio_losses(timeline.tau[None, :], terms.dates, scale)
    return _pair(cdo_legs_from_losses(losses, lo, hi, terms))


def cdo_legs_with_counterparty(l: int, timeline: DefaultTimeline, terms: ContractTerms,
                               tranches: TrancheSpec, loss_given_default_scaling: bool = False) -> LegPair:
    counterparty_tau = _require_counterparty(timeline)
    lo, hi = tranches.bounds(l)
    scale = 1.0 - terms.recovery if loss_given_default_scaling else 1.0
    losses = portfolio_losses(timeline.tau[None, :], terms.dates, scale)
    alive = counterparty_alive_at(np.array([counterparty_tau]), terms)
    return _pair(cdo_legs_from_losses(losses, lo, hi, terms, alive))


def swap_rate(contingent: MCEstimate, fee: MCEstimate, covariance: float = 0.0) -> MCEstimate:
    """Ratio estimator contingent / fee with a delta-method standard error.

    Args:
        contingent: Estimate of the contingent leg
        fee: Estimate of the fee leg per unit rate
        covariance: Covariance of the two sample means

    Returns:
        Swap-rate estimate
    """
    if not fee.value > 0:
        raise DegenerateContractError(f"fee leg must be positive to quote a rate, got {fee.value}")
    rate = contingent.value / fee.value
    variance = (contingent.std_error ** 2
                - 2.0 * rate * covariance
                + rate * rate * fee.std_error ** 2) / (fee.value * fee.value)
    return MCEstimate(value=rate, std_error=math.sqrt(max(0.0, variance)),
                      paths=contingent.paths, seed=contingent.seed)
