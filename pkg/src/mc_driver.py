"""Monte Carlo orchestration: copula -> thresholds -> timelines -> legs.

The path budget is split into a fixed number of logical blocks. Block ``b``
draws from ``SeedSequence(seed, spawn_key=(b, stream))`` so results depend
on (seed, paths, blocks, chunk size) only, never on how many worker threads
processed the blocks. Partial moment sums are folded in block order.
"""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.contagion_engine import (
    CounterpartyParams,
    IntensityParams,
    counterparty_default_times,
    ordered_defaults_batch,
)
from src.copulas import CopulaSpec, extra_name_uniforms, sample_copula_batch, to_sorted_thresholds
from src.errors import ConfigurationError, MergeError, NumericalError
from src.pricing import (
    ContractTerms,
    MCEstimate,
    TrancheSpec,
    cdo_legs_from_losses,
    cds_legs,
    counterparty_alive_at,
    portfolio_losses,
    swap_rate,
)

PORTFOLIO_STREAM = 0
COUNTERPARTY_STREAM = 1


class TargetKind(str, Enum):
    CDS = 'cds'
    TRANCHE = 'tranche'


@dataclass(frozen=True, order=True)
class Target:
    """A quoted rate: kth-to-default swap (index k) or tranche (index l)"""

    kind: TargetKind
    index: int
    counterparty: bool = False

    @property
    def label(self) -> str:
        base = f"cds_k{self.index}" if self.kind is TargetKind.CDS else f"tranche_{self.index}"
        return f"{base}_cr" if self.counterparty else base

    @classmethod
    def cds(cls, k: int, counterparty: bool = False) -> 'Target':
        return cls(TargetKind.CDS, k, counterparty)

    @classmethod
    def tranche(cls, l: int, counterparty: bool = False) -> 'Target':
        return cls(TargetKind.TRANCHE, l, counterparty)

    @classmethod
    def parse(cls, label: str) -> 'Target':
        """Inverse of ``label``: cds_k5, tranche_2, tranche_3_cr"""
        text = label.strip()
        counterparty = text.endswith('_cr')
        if counterparty:
            text = text[:-3]
        try:
            if text.startswith('cds_k'):
                return cls.cds(int(text[5:]), counterparty)
            if text.startswith('tranche_'):
                return cls.tranche(int(text[8:]), counterparty)
        except ValueError:
            pass
        raise ConfigurationError(f"unknown target '{label}'", field='targets')


@dataclass(frozen=True)
class SimulationPlan:
    n_names: int
    paths: int
    seed: int
    copula: CopulaSpec
    intensity: IntensityParams
    terms: ContractTerms
    targets: Tuple[Target, ...]
    counterparty: Optional[CounterpartyParams] = None
    tranches: Optional[TrancheSpec] = None
    workers: int = 1
    blocks: int = 256
    chunk_paths: int = 8192
    loss_given_default_scaling: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(self.targets))
        if self.n_names < 1:
            raise ConfigurationError(f"must be at least 1, got {self.n_names}", field='n_names')
        if self.paths < 1:
            raise ConfigurationError(f"must be at least 1, got {self.paths}", field='paths')
        if self.seed < 0:
            raise ConfigurationError(f"must be non-negative, got {self.seed}", field='seed')
        if self.workers < 1:
            raise ConfigurationError(f"must be at least 1, got {self.workers}", field='workers')
        if self.blocks < 1:
            raise ConfigurationError(f"must be at least 1, got {self.blocks}", field='blocks')
        if self.chunk_paths < 1:
            raise ConfigurationError(f"must be at least 1, got {self.chunk_paths}", field='chunk_paths')
        if not self.targets:
            raise ConfigurationError("at least one target is required", field='targets')
        for target in self.targets:
            if target.kind is TargetKind.CDS and not 1 <= target.index <= self.n_names:
                raise ConfigurationError(
                    f"order k={target.index} outside [1, {self.n_names}]", field='targets')
            if target.kind is TargetKind.TRANCHE:
                if self.tranches is None:
                    raise ConfigurationError("tranche targets need tranche attachments", field='tranches')
                self.tranches.bounds(target.index)
            if target.counterparty and self.counterparty is None:
                raise ConfigurationError(
                    f"target {target.label} needs counterparty parameters", field='counterparty')

    def with_overrides(self, **changes) -> 'SimulationPlan':
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return SimulationPlan(**values)

    def fingerprint(self) -> str:
        """Hash of everything that determines the estimates (workers excluded)"""
        payload = {
            'n_names': self.n_names,
            'paths': self.paths,
            'seed': self.seed,
            'blocks': self.blocks,
            'chunk_paths': self.chunk_paths,
            'copula': self.copula.to_dict(),
            'intensity': [self.intensity.a, self.intensity.c, self.intensity.decay_label],
            'counterparty': ([self.counterparty.a_B, self.counterparty.c_B, self.counterparty.independent]
                             if self.counterparty else None),
            'terms': [self.terms.maturity, list(self.terms.payment_dates), self.terms.recovery, self.terms.rate],
            'tranches': list(self.tranches.attachments) if self.tranches else None,
            'lgd_scaling': self.loss_given_default_scaling,
        }
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode('utf-8'))
        return digest.hexdigest()[:16]


class CompensatedSum:
    """Neumaier summation of chunk totals"""

    __slots__ = ('total', 'compensation')

    def __init__(self, total: float = 0.0, compensation: float = 0.0):
        self.total = total
        self.compensation = compensation

    def add(self, value: float):
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.compensation += (self.total - t) + value
        else:
            self.compensation += (value - t) + self.total
        self.total = t

    def add_array(self, values: np.ndarray):
        self.add(math.fsum(values))

    def merged(self, other: 'CompensatedSum') -> 'CompensatedSum':
        result = CompensatedSum(self.total, self.compensation)
        result.add(other.total)
        result.add(other.compensation)
        return result

    @property
    def value(self) -> float:
        return self.total + self.compensation


@dataclass
class LegMoments:
    """Running sums of (x, y, x^2, y^2, x*y) for contingent x and fee y"""

    count: int = 0
    sums: List[CompensatedSum] = field(default_factory=lambda: [CompensatedSum() for _ in range(5)])

    def add(self, contingent: np.ndarray, fee: np.ndarray):
        self.count += len(contingent)
        for acc, values in zip(self.sums, (contingent, fee, contingent * contingent, fee * fee, contingent * fee)):
            acc.add_array(values)

    def merged(self, other: 'LegMoments') -> 'LegMoments':
        return LegMoments(count=self.count + other.count,
                          sums=[a.merged(b) for a, b in zip(self.sums, other.sums)])

    def raw(self) -> Tuple[float, ...]:
        return tuple(acc.value for acc in self.sums)

    def estimates(self, seed: int) -> Tuple[MCEstimate, MCEstimate, float]:
        """Contingent and fee estimates plus the covariance of their means"""
        m = self.count
        sx, sy, sxx, syy, sxy = self.raw()
        mean_x, mean_y = sx / m, sy / m
        if m > 1:
            var_x = max(0.0, (sxx - sx * mean_x) / (m - 1))
            var_y = max(0.0, (syy - sy * mean_y) / (m - 1))
            cov_means = (sxy - sx * mean_y) / (m - 1) / m
            se_x, se_y = math.sqrt(var_x / m), math.sqrt(var_y / m)
        else:
            se_x = se_y = cov_means = 0.0
        return (MCEstimate(mean_x, se_x, m, seed), MCEstimate(mean_y, se_y, m, seed), cov_means)


@dataclass
class PartialAccumulator:
    """Moments gathered from one or more consecutive blocks of a plan"""

    fingerprint: str
    paths: int
    moments: Dict[Target, LegMoments]

    def merged(self, other: 'PartialAccumulator') -> 'PartialAccumulator':
        if other.fingerprint != self.fingerprint:
            raise MergeError(f"cannot merge partials of plans {self.fingerprint} and {other.fingerprint}")
        if set(other.moments) != set(self.moments):
            raise MergeError("partials carry different targets")
        return PartialAccumulator(
            fingerprint=self.fingerprint,
            paths=self.paths + other.paths,
            moments={target: self.moments[target].merged(other.moments[target]) for target in self.moments},
        )


@dataclass(frozen=True)
class TargetEstimate:
    rate: MCEstimate
    contingent: MCEstimate
    fee: MCEstimate


def merge(partials: Sequence[PartialAccumulator]) -> PartialAccumulator:
    """Fold partial accumulators in the order given"""
    if not partials:
        raise MergeError("nothing to merge")
    result = partials[0]
    for partial in partials[1:]:
        result = result.merged(partial)
    return result


def estimates_from(partial: PartialAccumulator, seed: int) -> Dict[Target, TargetEstimate]:
    results = {}
    for target, moments in partial.moments.items():
        contingent, fee, covariance = moments.estimates(seed)
        results[target] = TargetEstimate(rate=swap_rate(contingent, fee, covariance),
                                         contingent=contingent, fee=fee)
    return results


class MonteCarloDriver:
    """Runs a SimulationPlan block by block"""

    def __init__(self, plan: SimulationPlan):
        self.plan = plan
        self.fingerprint = plan.fingerprint()
        self.logger = logging.getLogger(__name__)

    def block_sizes(self) -> List[int]:
        base, extra = divmod(self.plan.paths, self.plan.blocks)
        return [base + (1 if b < extra else 0) for b in range(self.plan.blocks)]

    def block_generator(self, block: int, stream: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.plan.seed, spawn_key=(block, stream))
        return np.random.Generator(np.random.PCG64(sequence))

    def empty_partial(self) -> PartialAccumulator:
        return PartialAccumulator(self.fingerprint, 0, {target: LegMoments() for target in self.plan.targets})

    def simulate_block(self, block: int) -> PartialAccumulator:
        """Simulate every path of one block and accumulate leg moments"""
        plan = self.plan
        sizes = self.block_sizes()
        size = sizes[block]
        offset = sum(sizes[:block])
        partial = self.empty_partial()
        partial.paths = size

        portfolio_rng = self.block_generator(block, PORTFOLIO_STREAM)
        counterparty_rng = self.block_generator(block, COUNTERPARTY_STREAM)

        done = 0
        while done < size:
            m = min(plan.chunk_paths, size - done)
            try:
                self._simulate_chunk(m, portfolio_rng, counterparty_rng, partial)
            except NumericalError as e:
                raise e.locate(offset + done, block) from e
            done += m

        self.logger.debug(f"block {block}: {size} paths")
        return partial

    def _simulate_chunk(self, m: int, portfolio_rng: np.random.Generator,
                        counterparty_rng: np.random.Generator, partial: PartialAccumulator):
        plan = self.plan
        terms = plan.terms

        draw = sample_copula_batch(plan.copula, m, plan.n_names, portfolio_rng)
        tau = ordered_defaults_batch(plan.intensity, to_sorted_thresholds(draw.u))

        counterparty_tau = None
        if plan.counterparty is not None:
            if plan.counterparty.independent:
                e_B = counterparty_rng.standard_exponential(m)
            else:
                e_B = -np.log1p(-extra_name_uniforms(plan.copula, draw, counterparty_rng))
            counterparty_tau = counterparty_default_times(plan.counterparty, tau, e_B)

        losses = alive = None
        if any(t.kind is TargetKind.TRANCHE for t in plan.targets):
            scale = 1.0 - terms.recovery if plan.loss_given_default_scaling else 1.0
            losses = portfolio_losses(tau, terms.dates, scale)
            if counterparty_tau is not None:
                alive = counterparty_alive_at(counterparty_tau, terms)

        for target in plan.targets:
            if target.kind is TargetKind.CDS:
                gate = counterparty_tau if target.counterparty else None
                contingent, fee = cds_legs(tau[:, target.index - 1], terms, gate)
            else:
                lo, hi = plan.tranches.bounds(target.index)
                gate = alive if target.counterparty else None
                contingent, fee = cdo_legs_from_losses(losses, lo, hi, terms, gate)
            partial.moments[target].add(contingent, fee)

    def partials(self) -> List[PartialAccumulator]:
        """Per-block partial accumulators in block order"""
        blocks = range(self.plan.blocks)
        if self.plan.workers == 1:
            return [self.simulate_block(b) for b in blocks]
        with ThreadPoolExecutor(max_workers=self.plan.workers) as pool:
            return list(pool.map(self.simulate_block, blocks))

    def run_legs(self) -> Dict[Target, TargetEstimate]:
        plan = self.plan
        self.logger.info(
            f"Plan {self.fingerprint}: {plan.paths} paths, {plan.blocks} blocks, "
            f"{plan.workers} workers, copula {plan.copula.label}, "
            f"a={plan.intensity.a} c={plan.intensity.c} d={plan.intensity.decay_label}"
        )
        started = time.perf_counter()
        merged = merge(self.partials())
        results = estimates_from(merged, plan.seed)
        self.logger.info(f"Plan {self.fingerprint} finished in {time.perf_counter() - started:.2f}s")
        return results


def run(plan: SimulationPlan) -> Dict[Target, MCEstimate]:
    """Swap-rate estimate for every target of the plan"""
    return {target: estimate.rate for target, estimate in MonteCarloDriver(plan).run_legs().items()}
