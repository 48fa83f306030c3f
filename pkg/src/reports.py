"""CSV reports: single-plan results, reproduction tables and density dumps."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from config.settings import settings
from config.table_layouts import Row, TableLayouts
from src.analytic_oracle import hypoexp_for
from src.contagion_engine import CounterpartyParams, IntensityParams, default_times_by_name
from src.copulas import CopulaSpec, sample_uniforms
from src.errors import ConfigurationError
from src.mc_driver import MonteCarloDriver, SimulationPlan, Target, TargetEstimate
from src.pricing import ContractTerms, MCEstimate, TrancheSpec

logger = logging.getLogger(__name__)

Cell = Tuple[Row, str, Target]


@dataclass(frozen=True)
class ColumnGroup:
    """One simulation plan and the table cells its targets fill"""

    label: str
    plan: SimulationPlan
    cells: Tuple[Cell, ...]


def results_frame(results: Dict[Target, TargetEstimate], paths: int, seed: int) -> pd.DataFrame:
    """One row holding the rate and its standard error for every target"""
    record = {'seed': seed, 'paths': paths}
    for target in sorted(results):
        rate = results[target].rate
        record[target.label] = rate.value
        record[f"{target.label}_se"] = rate.std_error
    return pd.DataFrame([record])


def write_csv(frame: pd.DataFrame, out: Optional[Path], precision: int = None) -> str:
    """Write ``frame`` as CSV to ``out`` (or just return the text)"""
    precision = settings.PRECISION if precision is None else precision
    text = frame.to_csv(index=False, float_format=f"%.{precision}f", lineterminator='\n')
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding='utf-8')
        logger.info(f"Wrote {len(frame)} rows to {out}")
    return text


class TableReporter:
    """Re-runs the published rate tables.

    Every plan of every table uses the same seed and block count, so cells
    that describe the same model coincide exactly across tables.
    """

    def __init__(self, paths: int = None, seed: int = None, workers: int = None,
                 blocks: int = None, base_hazard: float = None, ledger=None):
        self.paths = paths or settings.DEFAULT_PATHS
        self.seed = settings.DEFAULT_SEED if seed is None else seed
        self.workers = workers or settings.WORKERS
        self.blocks = blocks or settings.BLOCK_COUNT
        self.base_hazard = base_hazard or settings.BASE_HAZARD
        self.ledger = ledger
        self.terms = ContractTerms.equally_spaced(settings.MATURITY, settings.PAYMENTS,
                                                  settings.RECOVERY, settings.RATE)
        self.tranches = TrancheSpec(settings.ATTACHMENTS)
        self.logger = logging.getLogger(__name__)

    def _plan(self, copula: CopulaSpec, c: float, targets: List[Target], d: float = 0.0,
              counterparty: Optional[CounterpartyParams] = None) -> SimulationPlan:
        return SimulationPlan(
            n_names=settings.N_NAMES,
            paths=self.paths,
            seed=self.seed,
            copula=copula,
            intensity=IntensityParams(a=self.base_hazard, c=c, d=d),
            terms=self.terms,
            targets=tuple(targets),
            counterparty=counterparty,
            tranches=self.tranches,
            workers=self.workers,
            blocks=self.blocks,
            chunk_paths=settings.CHUNK_PATHS,
        )

    @staticmethod
    def _contract_cells(column: str) -> List[Cell]:
        cells = [((f"k={k}",), column, Target.cds(k)) for k in TableLayouts.CDS_ORDERS]
        cells += [((label,), column, Target.tranche(l))
                  for l, label in enumerate(TableLayouts.TRANCHE_LABELS, start=1)]
        return cells

    def _copula_for(self, tag: str) -> CopulaSpec:
        if tag == 'ProdC':
            return CopulaSpec.product()
        if tag == 'ExpC':
            return CopulaSpec.exponential(settings.EXP_COPULA_C0, settings.EXP_COPULA_C1)
        return CopulaSpec.gaussian(settings.GAUSSIAN_RHO)

    def groups(self, table_id: int) -> List[ColumnGroup]:
        """Plans needed for a table, in the order they are run"""
        groups = []
        tranche_targets = [Target.tranche(l) for l in range(1, len(TableLayouts.TRANCHE_LABELS) + 1)]

        if table_id == 1:
            for rho in TableLayouts.FACTOR_LOADINGS:
                for c in TableLayouts.CONTAGION_LEVELS:
                    column = TableLayouts.contagion_label(c)
                    cells = tuple(((TableLayouts.loading_label(rho), label), column, target)
                                  for label, target in zip(TableLayouts.TRANCHE_LABELS, tranche_targets))
                    plan = self._plan(CopulaSpec.gaussian(rho), c, tranche_targets)
                    groups.append(ColumnGroup(f"rho={rho} {column}", plan, cells))

        elif table_id == 2:
            for c in TableLayouts.CONTAGION_LEVELS:
                for tag in TableLayouts.COPULA_TAGS:
                    column = f"{TableLayouts.contagion_label(c)} {tag}"
                    cells = tuple(self._contract_cells(column))
                    plan = self._plan(self._copula_for(tag), c, [cell[2] for cell in cells])
                    groups.append(ColumnGroup(column, plan, cells))

        elif table_id == 3:
            for d in TableLayouts.DECAY_RATES:
                column = TableLayouts.decay_label(d)
                cells = tuple(self._contract_cells(column))
                plan = self._plan(CopulaSpec.gaussian(TableLayouts.DECAY_TABLE_RHO),
                                  TableLayouts.DECAY_TABLE_CONTAGION, [cell[2] for cell in cells], d=d)
                groups.append(ColumnGroup(column, plan, cells))

        elif table_id == 4:
            plain_tag, gated_tag = TableLayouts.COUNTERPARTY_TAGS
            for rho in TableLayouts.FACTOR_LOADINGS:
                for c in TableLayouts.CONTAGION_LEVELS:
                    level = TableLayouts.contagion_label(c)
                    cells = []
                    for label, target in zip(TableLayouts.TRANCHE_LABELS, tranche_targets):
                        row = (TableLayouts.loading_label(rho), label)
                        cells.append((row, f"{level} {plain_tag}", target))
                        cells.append((row, f"{level} {gated_tag}", Target.tranche(target.index, counterparty=True)))
                    counterparty = CounterpartyParams(
                        a_B=self.base_hazard * settings.COUNTERPARTY_HAZARD_FRACTION, c_B=c)
                    plan = self._plan(CopulaSpec.gaussian(rho), c, [cell[2] for cell in cells],
                                      counterparty=counterparty)
                    groups.append(ColumnGroup(f"rho={rho} {level}", plan, tuple(cells)))

        else:
            raise ConfigurationError(f"table id must be one of {TableLayouts.table_ids()}, got {table_id}",
                                     field='id')
        return groups

    def run_group(self, table_id: int, group: ColumnGroup) -> Dict[Target, TargetEstimate]:
        results = MonteCarloDriver(group.plan).run_legs()
        if self.ledger is not None:
            self.ledger.record_run(group.plan, results, command='table', label=f"table {table_id}: {group.label}")
        self.logger.info(f"Table {table_id} cell group '{group.label}' done")
        return results

    def estimates(self, table_id: int) -> Dict[Tuple[Row, str], MCEstimate]:
        """Rate estimate for every (row, column) cell"""
        cells = {}
        for group in self.groups(table_id):
            results = self.run_group(table_id, group)
            for row, column, target in group.cells:
                cells[(row, column)] = results[target].rate
        return cells

    def reproduce(self, table_id: int, compare: bool = False) -> pd.DataFrame:
        """Estimates laid out like the published table, with a ``_se`` column
        per column and, if ``compare``, the published value as ``_published``"""
        cells = self.estimates(table_id)
        headers = TableLayouts.row_headers(table_id)
        records = []
        for row in TableLayouts.rows(table_id):
            record = dict(zip(headers, row))
            for column in TableLayouts.columns(table_id):
                estimate = cells[(row, column)]
                record[column] = estimate.value
                record[f"{column}_se"] = estimate.std_error
                if compare:
                    record[f"{column}_published"] = TableLayouts.published(table_id, row, column)
            records.append(record)
        return pd.DataFrame.from_records(records)


def reproduce_table(table_id: int, paths: int = None, seed: int = None, workers: int = None,
                    blocks: int = None, base_hazard: float = None, compare: bool = False,
                    ledger=None) -> pd.DataFrame:
    """Monte Carlo reproduction of one of the published rate tables"""
    reporter = TableReporter(paths=paths, seed=seed, workers=workers, blocks=blocks,
                             base_hazard=base_hazard, ledger=ledger)
    return reporter.reproduce(table_id, compare=compare)


def parse_grid(grid: str) -> np.ndarray:
    """``"t0:t1:steps"`` -> the steps + 1 equally spaced points from t0 to t1"""
    parts = grid.split(':')
    try:
        if len(parts) != 3:
            raise ValueError
        t0, t1, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigurationError(f"expected 't0:t1:steps', got '{grid}'", field='grid') from None
    if not (math.isfinite(t0) and math.isfinite(t1)) or t0 < 0 or t1 <= t0 or steps < 1:
        raise ConfigurationError(f"need 0 <= t0 < t1 and steps >= 1, got '{grid}'", field='grid')
    return np.linspace(t0, t1, steps + 1)


def dump_density(k: int, n: int, a: float, c: float, grid: str) -> pd.DataFrame:
    """Analytic density f and distribution F of the k-th default time on a grid"""
    law = hypoexp_for(k, n, IntensityParams(a=a, c=c, d=0.0))
    times = parse_grid(grid)
    logger.debug(f"Density of tau_{k} (n={n}, a={a}, c={c}) on {len(times)} points, "
                 f"partial fractions: {law.uses_partial_fractions}")
    return pd.DataFrame({
        't': times,
        'f': law.pdf(times),
        'F': law.cdf(times),
    })


def name_defaults(copula: CopulaSpec, intensity: IntensityParams, n: int, seed: int,
                  maturity: float) -> pd.DataFrame:
    """Which names default, when, and in what order, on one simulated path.

    Names are numbered from 1. Rows come in default order; simultaneous
    defaults keep name order.
    """
    if seed < 0:
        raise ConfigurationError(f"must be non-negative, got {seed}", field='seed')
    rng = np.random.default_rng(seed)
    thresholds = -np.log1p(-sample_uniforms(copula, n, rng))
    named = default_times_by_name(intensity, thresholds)
    order = np.asarray(named.order)
    logger.debug(f"Path with seed {seed}: {int(np.sum(named.times <= maturity))} of {n} names "
                 f"default by {maturity}")
    return pd.DataFrame({
        'rank': np.arange(1, n + 1),
        'name': order + 1,
        'threshold': thresholds[order],
        'default_time': named.times[order],
        'by_maturity': named.times[order] <= maturity,
    })
