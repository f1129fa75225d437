#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/database_manager/database.py
Created: 2026-09-08 09:31:47 UTC

Description:
    This module handles the SQLite run registry: an index of training runs
    and per-utterance evaluation rows across all systems of a workdir.
    Run directories stay self-describing; the registry only indexes them.
'''

import json
import logging
import sqlite3
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from vcforge.domain.domain import UtteranceScore
from vcforge.models import RunMetadata

# Get a logger for this module
logger = logging.getLogger(__name__)

class RunRegistry:
    """A class to handle all registry operations for training and evaluation runs.

    Attributes:
        db_path (str): Path to the SQLite database file.
    """
    db_path: str

    def __init__(self, db_path: Union[str, Path]) -> None:
        """Initialize the registry and create its tables.

        Args:
            db_path (Union[str, Path]): SQLite file, created with its parent directory if missing.
        """
        Path(db_path).parent.mkdir(parents=True, exist_ok=True)
        self.db_path = str(db_path)
        logger.info(f"Run registry initialized with path: {self.db_path}")
        self._create_tables()

    def _create_tables(self) -> None:
        """Create the `runs` and `evaluations` tables if they don't exist.

        runs:
            - run_id (PRIMARY KEY), system, seed, config_hash, train_ids (JSON),
              model_files (JSON), phases (JSON), deterministic, created_at
        evaluations:
            - system, utt_id, lsd_percent, lsd_speech_percent, f0_rmse_hz,
              voicing_mismatch_rate, n_frames, created_at
        """
        logger.debug("Creating registry tables if they don't exist")
        conn = sqlite3.connect(self.db_path)
        cursor: sqlite3.Cursor = conn.cursor()

        cursor.execute('''
        CREATE TABLE IF NOT EXISTS runs (
            run_id INTEGER PRIMARY KEY AUTOINCREMENT,
            system TEXT,
            seed INTEGER,
            config_hash TEXT,
            train_ids TEXT,
            model_files TEXT,
            phases TEXT,
            deterministic INTEGER,
            created_at TEXT DEFAULT CURRENT_TIMESTAMP
        )
        ''')
        cursor.execute('''
        CREATE TABLE IF NOT EXISTS evaluations (
            system TEXT,
            utt_id TEXT,
            lsd_percent REAL,
            lsd_speech_percent REAL,
            f0_rmse_hz REAL,
            voicing_mismatch_rate REAL,
            n_frames INTEGER,
            created_at TEXT DEFAULT CURRENT_TIMESTAMP
        )
        ''')

        conn.commit()
        conn.close()
        logger.debug("Registry tables created/verified successfully")

    def record_run(self, metadata: RunMetadata) -> int:
        """Insert one training run and return its run_id."""
        conn: sqlite3.Connection = sqlite3.connect(self.db_path)
        try:
            cursor = conn.execute('''
            INSERT INTO runs (system, seed, config_hash, train_ids, model_files, phases, deterministic)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', (
                metadata.system,
                metadata.seed,
                metadata.config_hash,
                json.dumps(metadata.train_ids),
                json.dumps(metadata.model_files),
                json.dumps([phase.model_dump() for phase in metadata.phases]),
                int(metadata.deterministic),
            ))
            conn.commit()
            logger.info(f"Recorded run {cursor.lastrowid} for {metadata.system}")
            return int(cursor.lastrowid)
        finally:
            conn.close()

    def record_evaluation(self, system: str, scores: Sequence[UtteranceScore]) -> None:
        """Replace the stored evaluation rows of `system` with `scores`."""
        conn: sqlite3.Connection = sqlite3.connect(self.db_path)
        try:
            conn.execute('DELETE FROM evaluations WHERE system = ?', (system,))
            conn.executemany('''
            INSERT INTO evaluations
            (system, utt_id, lsd_percent, lsd_speech_percent, f0_rmse_hz, voicing_mismatch_rate, n_frames)
            VALUES (?, ?, ?, ?, ?, ?, ?)
            ''', [
                (system, s.utt_id, s.lsd_percent, s.lsd_speech_percent, s.f0_rmse_hz,
                 s.voicing_mismatch_rate, s.n_frames)
                for s in scores
            ])
            conn.commit()
            logger.info(f"Recorded {len(scores)} evaluation rows for {system}")
        finally:
            conn.close()

    def latest_runs(self, system: Optional[str] = None, limit: int = 10) -> List[Dict[str, Any]]:
        """Most recent runs, newest first, optionally for one system.

        Returns an empty list on database errors.
        """
        conn: Optional[sqlite3.Connection] = None
        try:
            conn = sqlite3.connect(self.db_path)
            conn.row_factory = sqlite3.Row
            if system:
                rows = conn.execute('SELECT * FROM runs WHERE system = ? ORDER BY run_id DESC LIMIT ?',
                                    (system, limit)).fetchall()
            else:
                rows = conn.execute('SELECT * FROM runs ORDER BY run_id DESC LIMIT ?', (limit,)).fetchall()
            runs = []
            for row in rows:
                row_dict: Dict[str, Any] = dict(row)
                for key in ("train_ids", "model_files", "phases"):
                    row_dict[key] = json.loads(row_dict[key]) if row_dict.get(key) else []
                row_dict["deterministic"] = bool(row_dict["deterministic"])
                runs.append(row_dict)
            return runs
        except sqlite3.Error as e:
            logger.error(f"Registry error: {e}", exc_info=True)
            return []
        finally:
            if conn:
                conn.close()

    def evaluation_rows(self, system: str) -> List[Dict[str, Any]]:
        """Stored per-utterance rows of one system in insertion order."""
        conn: Optional[sqlite3.Connection] = None
        try:
            conn = sqlite3.connect(self.db_path)
            conn.row_factory = sqlite3.Row
            rows = conn.execute('SELECT * FROM evaluations WHERE system = ? ORDER BY rowid', (system,)).fetchall()
            return [dict(row) for row in rows]
        except sqlite3.Error as e:
            logger.error(f"Registry error: {e}", exc_info=True)
            return []
        finally:
            if conn:
                conn.close()
