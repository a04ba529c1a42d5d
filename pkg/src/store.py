"""Registro SQLite de corridas y tiempos por fase."""

import json
import sqlite3
import time
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .utils import get_data_dir, setup_logging

logger = setup_logging()


class RunStore:
    """Libro de corridas: comando, hash de configuración, estado y fases."""

    def __init__(self, db_path: Optional[Path] = None):
        """Abrir (o crear) la base de datos del registro."""
        if db_path is None:
            db_path = get_data_dir() / "runs.db"

        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self.conn = sqlite3.connect(str(self.db_path))
        self.conn.row_factory = sqlite3.Row
        self._clock: Dict[int, float] = {}
        self._init_schema()
        logger.debug(f"Registro de corridas: {self.db_path}")

    def _init_schema(self):
        cursor = self.conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                config_hash TEXT NOT NULL,
                config_yaml TEXT,
                status TEXT DEFAULT 'running',
                exit_code INTEGER,
                outputs TEXT,
                message TEXT,
                started_at TIMESTAMP NOT NULL,
                finished_at TIMESTAMP,
                wall_seconds REAL
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS phases (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL,
                name TEXT NOT NULL,
                seconds REAL NOT NULL,
                FOREIGN KEY (run_id) REFERENCES runs(id)
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS settings (
                key TEXT PRIMARY KEY,
                value TEXT NOT NULL,
                updated_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP
            )
        """)

        cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_hash ON runs(config_hash)")
        cursor.execute("CREATE INDEX IF NOT EXISTS idx_phases_run ON phases(run_id)")
        self.conn.commit()

    def execute(self, query: str, params: tuple = ()) -> sqlite3.Cursor:
        cursor = self.conn.cursor()
        cursor.execute(query, params)
        self.conn.commit()
        return cursor

    def fetchone(self, query: str, params: tuple = ()) -> Optional[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute(query, params)
        row = cursor.fetchone()
        return dict(row) if row else None

    def fetchall(self, query: str, params: tuple = ()) -> List[Dict[str, Any]]:
        cursor = self.conn.cursor()
        cursor.execute(query, params)
        return [dict(row) for row in cursor.fetchall()]

    def insert(self, table: str, data: Dict[str, Any]) -> int:
        columns = ", ".join(data.keys())
        placeholders = ", ".join(["?" for _ in data])
        cursor = self.execute(f"INSERT INTO {table} ({columns}) VALUES ({placeholders})", tuple(data.values()))
        return cursor.lastrowid

    def update(self, table: str, data: Dict[str, Any], where: str, params: tuple = ()) -> int:
        set_clause = ", ".join([f"{k} = ?" for k in data.keys()])
        cursor = self.execute(f"UPDATE {table} SET {set_clause} WHERE {where}", tuple(data.values()) + params)
        return cursor.rowcount

    def get_setting(self, key: str, default: Any = None) -> Any:
        result = self.fetchone("SELECT value FROM settings WHERE key = ?", (key,))
        return result["value"] if result else default

    def set_setting(self, key: str, value: Any):
        self.execute(
            """
            INSERT INTO settings (key, value, updated_at)
            VALUES (?, ?, CURRENT_TIMESTAMP)
            ON CONFLICT(key) DO UPDATE SET
                value = excluded.value,
                updated_at = CURRENT_TIMESTAMP
            """,
            (key, str(value)),
        )

    def start_run(self, command: str, config_hash: str, config_yaml: str = "") -> int:
        """Registrar el inicio de una corrida."""
        run_id = self.insert("runs", {
            "command": command,
            "config_hash": config_hash,
            "config_yaml": config_yaml,
            "started_at": datetime.now().isoformat(timespec="seconds"),
        })
        self._clock[run_id] = time.perf_counter()
        self.set_setting("last_run_id", run_id)
        return run_id

    @contextmanager
    def phase(self, run_id: int, name: str):
        """Medir la duración de una fase y guardarla al salir."""
        start = time.perf_counter()
        try:
            yield
        finally:
            seconds = time.perf_counter() - start
            self.insert("phases", {"run_id": run_id, "name": name, "seconds": seconds})
            logger.debug(f"Fase {name}: {seconds:.3f} s")

    def finish_run(
        self,
        run_id: int,
        status: str,
        exit_code: int,
        outputs: Optional[List[str]] = None,
        message: str = "",
    ):
        """Cerrar la corrida con su estado final."""
        started = self._clock.pop(run_id, None)
        wall = time.perf_counter() - started if started is not None else None
        self.update(
            "runs",
            {
                "status": status,
                "exit_code": exit_code,
                "outputs": json.dumps(outputs or []),
                "message": message,
                "finished_at": datetime.now().isoformat(timespec="seconds"),
                "wall_seconds": wall,
            },
            "id = ?",
            (run_id,),
        )

    def get_run(self, run_id: int) -> Optional[Dict[str, Any]]:
        return self.fetchone("SELECT * FROM runs WHERE id = ?", (run_id,))

    def phases_for(self, run_id: int) -> List[Dict[str, Any]]:
        return self.fetchall("SELECT name, seconds FROM phases WHERE run_id = ? ORDER BY id", (run_id,))

    def recent_runs(self, limit: int = 20) -> List[Dict[str, Any]]:
        return self.fetchall(
            """
            SELECT id, command, config_hash, status, exit_code, started_at, wall_seconds
            FROM runs ORDER BY id DESC LIMIT ?
            """,
            (limit,),
        )

    def close(self):
        self.conn.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
