import os
import sqlite3
import logging
from typing import Any, Dict, List

from .artifacts import RunManifest

logger = logging.getLogger(__name__)

# Define table schemas
SCHEMA_INIT = [
    # One row per completed run
    """
    CREATE TABLE IF NOT EXISTS runs (
        run_id TEXT PRIMARY KEY,
        experiment TEXT NOT NULL,
        config_hash TEXT NOT NULL,
        seed INTEGER NOT NULL,
        threads INTEGER NOT NULL,
        output_dir TEXT NOT NULL,
        started_at TIMESTAMP NOT NULL,
        wall_time_s REAL NOT NULL
    )
    """,

    # Files written by a run
    """
    CREATE TABLE IF NOT EXISTS artifacts (
        run_id TEXT NOT NULL,
        path TEXT NOT NULL,
        kind TEXT NOT NULL,
        sha256 TEXT NOT NULL,
        rows INTEGER,
        PRIMARY KEY (run_id, path),
        FOREIGN KEY (run_id) REFERENCES runs(run_id)
    )
    """
]

SCHEMA_INDEXES = [
    "CREATE INDEX IF NOT EXISTS idx_runs_experiment ON runs (experiment)",
    "CREATE INDEX IF NOT EXISTS idx_runs_config ON runs (config_hash)"
]


def get_db_connection(db_path: str) -> sqlite3.Connection:
    """Connection with row_factory set to sqlite3.Row; creates the schema on first use."""
    if not os.path.exists(db_path):
        initialize_db(db_path)

    conn = sqlite3.connect(db_path)
    conn.row_factory = sqlite3.Row
    return conn


def initialize_db(db_path: str) -> None:
    """Create the runs and artifacts tables at db_path."""
    logger.info(f"Initializing run index: {db_path}")
    parent = os.path.dirname(db_path)
    if parent:
        os.makedirs(parent, exist_ok=True)

    conn = sqlite3.connect(db_path)
    cursor = conn.cursor()
    for table_schema in SCHEMA_INIT:
        cursor.execute(table_schema)
    for index_schema in SCHEMA_INDEXES:
        cursor.execute(index_schema)
    conn.commit()
    conn.close()


def record_run(db_path: str, manifest: RunManifest, output_dir: str) -> None:
    """Add a run and its artifacts to the index."""
    conn = get_db_connection(db_path)
    cursor = conn.cursor()
    cursor.execute(
        """
        INSERT OR REPLACE INTO runs
        (run_id, experiment, config_hash, seed, threads, output_dir, started_at, wall_time_s)
        VALUES (?, ?, ?, ?, ?, ?, ?, ?)
        """,
        (manifest.run_id, manifest.experiment, manifest.config_hash, manifest.seed, manifest.threads,
         output_dir, manifest.started_at, manifest.wall_time_s)
    )
    cursor.executemany(
        "INSERT OR REPLACE INTO artifacts (run_id, path, kind, sha256, rows) VALUES (?, ?, ?, ?, ?)",
        [(manifest.run_id, a.path, a.kind, a.sha256, a.rows) for a in manifest.artifacts]
    )
    conn.commit()
    conn.close()

    logger.info(f"Indexed run {manifest.run_id} ({manifest.experiment}) with {len(manifest.artifacts)} artifacts")


def get_runs(db_path: str, limit: int = 50) -> List[Dict[str, Any]]:
    """Most recent runs first."""
    if not os.path.exists(db_path):
        return []
    conn = get_db_connection(db_path)
    try:
        rows = conn.execute("SELECT * FROM runs ORDER BY started_at DESC LIMIT ?", (limit,)).fetchall()
    finally:
        conn.close()
    return [dict(row) for row in rows]


def get_artifacts(db_path: str, run_id: str) -> List[Dict[str, Any]]:
    if not os.path.exists(db_path):
        return []
    conn = get_db_connection(db_path)
    try:
        rows = conn.execute("SELECT * FROM artifacts WHERE run_id = ? ORDER BY path", (run_id,)).fetchall()
    finally:
        conn.close()
    return [dict(row) for row in rows]
