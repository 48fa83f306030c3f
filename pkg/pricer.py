#!/usr/bin/env python3
"""
Contagion Pricer - command line

Prices kth-to-default swaps and CDO tranches by Monte Carlo under the
copula contagion mixture model, re-runs the published rate tables and
tabulates the analytic default-time densities.

Examples:
  python pricer.py price --config configs/base_case.json --out data/output/price.csv
  python pricer.py table --id 1 --paths 100000 --compare --out data/output/table1.csv
  python pricer.py density --k 2 --grid 0:50:500 --out data/output/density_k2.csv
  python pricer.py defaults --config configs/base_case.json --seed 7
  python pricer.py history --limit 5
"""

import functools
import logging
import sys
from pathlib import Path

import click

from config.settings import settings
from src.database import RunLedger
from src.errors import EXIT_FAILURE, PricerError
from src.mc_driver import MonteCarloDriver
from src.reports import dump_density, name_defaults, reproduce_table, results_frame, write_csv
from src.run_config import RunConfig, parse_config

logger = logging.getLogger('pricer')


def configure_logging(level: str):
    """File log under LOGS_DIR plus stderr"""
    settings.ensure_directories()
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(settings.LOGS_DIR / 'pricer.log'),
            logging.StreamHandler()
        ]
    )


def reports_errors(command):
    """Turn pricer errors into a message and the matching exit code"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PricerError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"❌ {type(e).__name__}: {e}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def open_ledger():
    return RunLedger() if settings.ENABLE_LEDGER else None


def emit(frame, out, precision):
    text = write_csv(frame, out, precision)
    if out is None:
        click.echo(text, nl=False)
    else:
        click.echo(f"✅ Wrote {len(frame)} rows to {out}")


@click.group()
@click.option('--log-level', default=settings.LOG_LEVEL, show_default=True, help='Logging level')
def cli(log_level):
    """Monte Carlo pricer for basket CDSs and CDO tranches with default contagion"""
    configure_logging(log_level)


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='JSON run configuration (see docs/config-schema.md)')
@click.option('--seed', type=int, help='Master seed')
@click.option('--paths', type=int, help='Number of simulated paths')
@click.option('--workers', type=int, help='Worker threads')
@click.option('--blocks', type=int, help='Logical seed blocks')
@click.option('--precision', type=int, help='Decimals in the CSV')
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), help='CSV file (default: stdout)')
@reports_errors
def price(config_path, seed, paths, workers, blocks, precision, out):
    """Price every target of one run configuration"""
    config = parse_config(config_path.read_text(encoding='utf-8')) if config_path else RunConfig()
    precision = config.output.precision if precision is None else precision
    out = out or (Path(config.output.csv) if config.output.csv else None)

    if config.output.table is not None:
        frame = reproduce_table(
            config.output.table,
            paths=paths or config.paths,
            seed=config.seed if seed is None else seed,
            workers=workers or config.workers,
            blocks=blocks or config.blocks,
            base_hazard=config.intensity.a,
            ledger=open_ledger(),
        )
        emit(frame, out, precision)
        return

    plan = config.to_plan(seed=seed, paths=paths, workers=workers, blocks=blocks)
    results = MonteCarloDriver(plan).run_legs()

    ledger = open_ledger()
    if ledger is not None:
        stored, message, _ = ledger.record_run(plan, results, command='price',
                                               label=str(config_path) if config_path else None)
        if stored:
            logger.info(message)
        else:
            logger.warning(message)

    emit(results_frame(results, plan.paths, plan.seed), out, precision)


@cli.command()
@click.option('--id', 'table_id', type=int, required=True, help='Table number (1-4)')
@click.option('--paths', type=int, default=None, help=f'Paths per plan [default: {settings.DEFAULT_PATHS}]')
@click.option('--seed', type=int, default=None, help=f'Master seed [default: {settings.DEFAULT_SEED}]')
@click.option('--workers', type=int, default=None, help='Worker threads')
@click.option('--blocks', type=int, default=None, help='Logical seed blocks')
@click.option('--base-hazard', type=float, default=None,
              help=f'Base hazard a [default: {settings.BASE_HAZARD}]')
@click.option('--compare', is_flag=True, help='Add the published value next to each estimate')
@click.option('--precision', type=int, default=None, help='Decimals in the CSV')
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), help='CSV file (default: stdout)')
@reports_errors
def table(table_id, paths, seed, workers, blocks, base_hazard, compare, precision, out):
    """Re-run one of the published rate tables"""
    frame = reproduce_table(table_id, paths=paths, seed=seed, workers=workers, blocks=blocks,
                            base_hazard=base_hazard, compare=compare, ledger=open_ledger())
    emit(frame, out, precision)


@cli.command()
@click.option('--k', type=int, required=True, help='Default order k')
@click.option('--grid', required=True, help='Time grid "t0:t1:steps"')
@click.option('--n', 'n_names', type=int, default=settings.N_NAMES, show_default=True, help='Number of names')
@click.option('--a', 'a', type=float, default=settings.BASE_HAZARD, show_default=True, help='Base hazard')
@click.option('--c', 'c', type=float, default=0.0, show_default=True, help='Contagion level')
@click.option('--precision', type=int, default=None, help='Decimals in the CSV')
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), help='CSV file (default: stdout)')
@reports_errors
def density(k, grid, n_names, a, c, precision, out):
    """Tabulate the analytic density and CDF of the k-th default time (d = 0)"""
    emit(dump_density(k, n_names, a, c, grid), out, precision)


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='JSON run configuration (copula, intensity, n_names, terms)')
@click.option('--seed', type=int, help='Seed of the path')
@click.option('--precision', type=int, default=None, help='Decimals in the CSV')
@click.option('--out', type=click.Path(dir_okay=False, path_type=Path), help='CSV file (default: stdout)')
@reports_errors
def defaults(config_path, seed, precision, out):
    """List the names defaulting on one simulated path, in default order"""
    config = parse_config(config_path.read_text(encoding='utf-8')) if config_path else RunConfig()
    frame = name_defaults(config.copula.build(), config.intensity.build(), config.n_names,
                          seed=config.seed if seed is None else seed, maturity=config.terms.maturity)
    emit(frame, out, config.output.precision if precision is None else precision)


@cli.command()
@click.option('--limit', type=int, default=10, show_default=True, help='Number of runs to list')
@click.option('--run-id', type=int, default=None, help='Show the estimates of one run')
def history(limit, run_id):
    """List recorded runs"""
    ledger = RunLedger()

    if run_id is not None:
        run = ledger.get_run(run_id)
        if not run:
            click.echo(f"❌ No run with id {run_id}", err=True)
            sys.exit(EXIT_FAILURE)
        click.echo(f"Run {run['id']} ({run['command']}) {run['started']}  plan {run['fingerprint']}")
        click.echo(f"  seed={run['seed']} paths={run['paths']} blocks={run['blocks']} workers={run['workers']}")
        for estimate in run['estimates']:
            click.echo(f"  {estimate['target']:<16} {estimate['rate']:.6f} ± {estimate['rate_std_error']:.6f}")
        return

    runs = ledger.get_recent_runs(limit)
    if not runs:
        click.echo("No runs recorded yet")
        return
    for run in runs:
        label = f"  [{run['label']}]" if run['label'] else ''
        click.echo(f"{run['id']:>5}  {run['started']}  {run['command']:<6} {run['fingerprint']}  "
                   f"paths={run['paths']} seed={run['seed']} targets={run['target_count']}{label}")


if __name__ == '__main__':
    cli()
