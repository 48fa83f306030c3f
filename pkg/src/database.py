import json
import sqlite3
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from config.settings import settings
from src.mc_driver import SimulationPlan, Target, TargetEstimate


class RunLedger:
    """SQLite record of simulation runs and their estimates"""

    def __init__(self, db_path: Optional[Path] = None):
        self.db_path = Path(db_path) if db_path else settings.DB_PATH
        self.logger = logging.getLogger(__name__)
        self._ensure_database()

    def _ensure_database(self):
        """Create database and tables if they don't exist"""
        self.db_path.parent.mkdir(parents=True, exist_ok=True)

        with self._get_connection() as conn:
            conn.execute('''
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    fingerprint TEXT NOT NULL,
                    command TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    paths INTEGER NOT NULL,
                    blocks INTEGER NOT NULL,
                    workers INTEGER NOT NULL,
                    plan_json TEXT NOT NULL,
                    label TEXT,
                    started TIMESTAMP DEFAULT CURRENT_TIMESTAMP
                )
            ''')

            conn.execute('''
                CREATE TABLE IF NOT EXISTS estimates (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER NOT NULL,
                    target TEXT NOT NULL,
                    rate REAL NOT NULL,
                    rate_std_error REAL NOT NULL,
                    contingent REAL NOT NULL,
                    fee REAL NOT NULL,
                    FOREIGN KEY (run_id) REFERENCES runs (id),
                    UNIQUE(run_id, target)
                )
            ''')

            conn.execute('''
                CREATE TABLE IF NOT EXISTS run_log (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    run_id INTEGER,
                    action TEXT NOT NULL,
                    details TEXT,
                    timestamp TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    FOREIGN KEY (run_id) REFERENCES runs (id)
                )
            ''')

            conn.commit()

    @contextmanager
    def _get_connection(self):
        """Context manager for database connections"""
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
        finally:
            conn.close()

    @staticmethod
    def _plan_json(plan: SimulationPlan) -> str:
        return json.dumps({
            'n_names': plan.n_names,
            'copula': plan.copula.to_dict(),
            'intensity': {'a': plan.intensity.a, 'c': plan.intensity.c, 'd': plan.intensity.decay_label},
            'counterparty': {'a_B': plan.counterparty.a_B, 'c_B': plan.counterparty.c_B,
                             'independent': plan.counterparty.independent}
            if plan.counterparty else None,
            'terms': {'maturity': plan.terms.maturity, 'payments': len(plan.terms.payment_dates),
                      'recovery': plan.terms.recovery, 'rate': plan.terms.rate},
            'tranches': list(plan.tranches.attachments) if plan.tranches else None,
            'targets': [target.label for target in plan.targets],
            'loss_given_default_scaling': plan.loss_given_default_scaling,
        }, sort_keys=True)

    def record_run(self, plan: SimulationPlan, results: Dict[Target, TargetEstimate],
                   command: str, label: Optional[str] = None) -> Tuple[bool, str, Optional[int]]:
        """Store a finished run and its estimates

        Args:
            plan: Plan that produced the results
            results: Estimates per target
            command: CLI command that ran the plan
            label: Optional free text (e.g. table cell group)

        Returns:
            Tuple of (success, message, run_id)
            - success: False if the run could not be stored
            - message: Description of what happened
            - run_id: Database ID if stored
        """
        try:
            fingerprint = plan.fingerprint()
            with self._get_connection() as conn:
                previous = conn.execute('''
                    SELECT id FROM runs WHERE fingerprint = ? ORDER BY id DESC LIMIT 1
                ''', (fingerprint,)).fetchone()

                cursor = conn.execute('''
                    INSERT INTO runs (fingerprint, command, seed, paths, blocks, workers, plan_json, label)
                    VALUES (?, ?, ?, ?, ?, ?, ?, ?)
                ''', (fingerprint, command, plan.seed, plan.paths, plan.blocks, plan.workers,
                      self._plan_json(plan), label))
                run_id = cursor.lastrowid

                for target, estimate in sorted(results.items()):
                    conn.execute('''
                        INSERT INTO estimates (run_id, target, rate, rate_std_error, contingent, fee)
                        VALUES (?, ?, ?, ?, ?, ?)
                    ''', (run_id, target.label, estimate.rate.value, estimate.rate.std_error,
                          estimate.contingent.value, estimate.fee.value))

                if previous:
                    self._log_action(conn, run_id, 'repeat_detected',
                                     f"Same plan {fingerprint} already recorded as run {previous['id']}")
                self._log_action(conn, run_id, 'run_recorded',
                                 f"{command}: {len(results)} targets, {plan.paths} paths")
                conn.commit()

            return True, f"Run {run_id} recorded ({fingerprint})", run_id

        except sqlite3.Error as e:
            self.logger.error(f"Error recording run: {e}")
            return False, f"Error recording run: {e}", None

    def _log_action(self, conn, run_id: int, action: str, details: str = None):
        """Log an action to the run log"""
        conn.execute('''
            INSERT INTO run_log (run_id, action, details)
            VALUES (?, ?, ?)
        ''', (run_id, action, details))

    def get_run(self, run_id: int) -> Optional[Dict]:
        """Get a run with its estimates"""
        with self._get_connection() as conn:
            row = conn.execute('SELECT * FROM runs WHERE id = ?', (run_id,)).fetchone()
            if not row:
                return None
            run = dict(row)
            run['estimates'] = [dict(r) for r in conn.execute('''
                SELECT target, rate, rate_std_error, contingent, fee
                FROM estimates WHERE run_id = ? ORDER BY target
            ''', (run_id,)).fetchall()]
            return run

    def get_recent_runs(self, limit: int = 10) -> List[Dict]:
        """Get recent runs, newest first"""
        with self._get_connection() as conn:
            rows = conn.execute('''
                SELECT r.*, COUNT(e.id) AS target_count
                FROM runs r
                LEFT JOIN estimates e ON e.run_id = r.id
                GROUP BY r.id
                ORDER BY r.id DESC
                LIMIT ?
            ''', (limit,)).fetchall()
            return [dict(row) for row in rows]

    def get_run_log(self, run_id: int = None, limit: int = 50) -> List[Dict]:
        """Get run log entries"""
        with self._get_connection() as conn:
            if run_id:
                rows = conn.execute('''
                    SELECT * FROM run_log WHERE run_id = ? ORDER BY id DESC LIMIT ?
                ''', (run_id, limit)).fetchall()
            else:
                rows = conn.execute('''
                    SELECT * FROM run_log ORDER BY id DESC LIMIT ?
                ''', (limit,)).fetchall()
            return [dict(row) for row in rows]
