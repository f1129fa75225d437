#!/usr/bin/env python
# -*- coding: utf-8 -*-
'''
                 ____
   _  _____     / __/__  _______ ____
  | |/ / __/   / _// _ \/ __/ _ `/ -_)
  |___/\__/   /_/  \___/_/  \_, /\__/
                           /___/

vcforge - Voice Conversion Toolkit
File: vcforge/logging_config.py
Created: 2026-09-02 10:31:07 UTC

Description:
    Configuration for the toolkit's logging system.
'''

import os
from datetime import datetime
import logging
import logging.handlers
from typing import Optional

from rich.logging import RichHandler

def setup_logging(debug_mode: bool = False, console_logs: bool = True,
                  log_dir: Optional[str] = None) -> logging.Logger:
    """
    Configure the logging system.

    Args:
        debug_mode (bool): If True, enables more detailed debug logging
        console_logs (bool): If True, logs will also be rendered on the console through rich.
        log_dir (Optional[str]): Directory for the rotating log file. Defaults to "logs".

    Returns:
        logging.Logger: The configured root logger.
    """
    log_dir = log_dir or "logs"
    os.makedirs(log_dir, exist_ok=True)

    log_filename = os.path.join(log_dir, f"vcforge{datetime.now().strftime('%Y%m%d')}.log")

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG if debug_mode else logging.INFO)

    # Iterate over a copy; removing while iterating the live list skips handlers
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    file_handler = logging.handlers.RotatingFileHandler(
        log_filename,
        maxBytes=10*1024*1024, # 10MB
        backupCount=5,
        encoding="utf-8"
    )
    file_formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    file_handler.setFormatter(file_formatter)
    root_logger.addHandler(file_handler)

    if console_logs:
        console_handler = RichHandler(show_path=False, rich_tracebacks=debug_mode)
        console_handler.setFormatter(logging.Formatter("%(name)s - %(message)s"))
        root_logger.addHandler(console_handler)

    # Worker pools and plotting backends are chatty at DEBUG
    logging.getLogger("joblib").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numba").setLevel(logging.WARNING)

    if debug_mode:
        logging.debug("Debug logging enabled")

    logging.info(f"Logging initialized. Log file: {log_filename}")

    return root_logger
