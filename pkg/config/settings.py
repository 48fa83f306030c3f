import os
from pathlib import Path
from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / '.env')


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == 'true'


class Settings:
    # Base directory
    BASE_DIR = BASE_DIR

    # Portfolio and contract data used throughout the reproduction tables
    N_NAMES = 40
    RATE = 0.05
    MATURITY = 3.0
    PAYMENTS = 6
    BASE_HAZARD = 0.01
    RECOVERY = 0.5
    DECAY = 0.0
    ATTACHMENTS = (0.0, 0.15, 0.3, 1.0)

    # Copula defaults
    EXP_COPULA_C0 = 0.01
    EXP_COPULA_C1 = 0.1
    GAUSSIAN_RHO = 0.5

    # Counterparty hazard is a fraction of the portfolio base hazard (a_B = a/10)
    COUNTERPARTY_HAZARD_FRACTION = 0.1

    # Simulation
    DEFAULT_SEED = int(os.getenv('PRICER_DEFAULT_SEED', '20090101'))
    DEFAULT_PATHS = int(os.getenv('PRICER_DEFAULT_PATHS', '1000000'))
    BLOCK_COUNT = int(os.getenv('PRICER_BLOCK_COUNT', '256'))
    WORKERS = int(os.getenv('PRICER_WORKERS', '1'))
    CHUNK_PATHS = int(os.getenv('PRICER_CHUNK_PATHS', '8192'))

    # Reports
    PRECISION = int(os.getenv('PRICER_PRECISION', '4'))

    # Feature Flags
    ENABLE_LEDGER = _env_bool('PRICER_ENABLE_LEDGER', 'true')

    # Paths
    DATA_DIR = Path(os.getenv('PRICER_DATA_DIR', str(BASE_DIR / 'data')))
    OUTPUT_DIR = DATA_DIR / 'output'
    LOGS_DIR = Path(os.getenv('PRICER_LOGS_DIR', str(BASE_DIR / 'logs')))
    DB_PATH = DATA_DIR / 'runs.db'

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')

    def ensure_directories(self):
        """Create necessary directories if they don't exist"""
        for dir_path in [self.DATA_DIR, self.OUTPUT_DIR, self.LOGS_DIR]:
            dir_path.mkdir(parents=True, exist_ok=True)

settings = Settings()
