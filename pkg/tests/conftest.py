import math

import numpy as np
import pytest
from scipy.integrate import quad

from config.settings import settings
from src.database import RunLedger
from src.pricing import ContractTerms, TrancheSpec, cds_legs


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the slow published-value reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# =====================================================
# Contract data used by the published tables
# =====================================================


@pytest.fixture
def base_terms():
    return ContractTerms.equally_spaced(settings.MATURITY, settings.PAYMENTS,
                                        settings.RECOVERY, settings.RATE)


@pytest.fixture
def base_tranches():
    return TrancheSpec(settings.ATTACHMENTS)


@pytest.fixture
def exponential_default_rate(base_terms):
    """Swap rate on a single name whose default time is Exp(h), by quadrature"""
    def _rate(h):
        def legs(t):
            contingent, fee = cds_legs(np.array([t]), base_terms)
            return contingent[0], fee[0]

        dates = list(base_terms.dates[:-1])
        maturity = base_terms.maturity
        contingent, _ = quad(lambda t: legs(t)[0] * h * math.exp(-h * t), 0.0, maturity, points=dates)
        fee, _ = quad(lambda t: legs(t)[1] * h * math.exp(-h * t), 0.0, maturity, points=dates)
        fee += math.exp(-h * maturity) * base_terms.annuity()
        return contingent / fee
    return _rate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# =====================================================
# Isolated output locations
# =====================================================


@pytest.fixture
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, 'DATA_DIR', tmp_path / 'data')
    monkeypatch.setattr(settings, 'OUTPUT_DIR', tmp_path / 'data' / 'output')
    monkeypatch.setattr(settings, 'LOGS_DIR', tmp_path / 'logs')
    monkeypatch.setattr(settings, 'DB_PATH', tmp_path / 'data' / 'runs.db')
    return settings


@pytest.fixture
def ledger(isolated_settings):
    return RunLedger(isolated_settings.DB_PATH)
