"""Centralized logging configuration for the application."""
import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logging(level: str = "INFO", log_dir: Optional[str] = None):
    """Configure application-wide logging.

    Console output always goes to stderr so that result tables written to
    stdout stay clean. File handlers are only attached when ``log_dir`` is set.

    Args:
        level: Root log level name (e.g. "INFO", "DEBUG")
        log_dir: Directory for rotating log files, or None for console only
    """
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    # Remove existing handlers
    root_logger.handlers.clear()

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    solver_logger = logging.getLogger('solver')
    solver_logger.handlers.clear()

    if not log_dir:
        return

    os.makedirs(log_dir, exist_ok=True)

    # Main application log file (rotating)
    app_file_handler = RotatingFileHandler(
        os.path.join(log_dir, "gapscope.log"),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=10,
        encoding='utf-8'
    )
    app_file_handler.setLevel(logging.INFO)
    app_file_handler.setFormatter(formatter)
    root_logger.addHandler(app_file_handler)

    # Error log file (ERROR level only, rotating)
    error_file_handler = RotatingFileHandler(
        os.path.join(log_dir, "error.log"),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    error_file_handler.setLevel(logging.ERROR)
    error_file_handler.setFormatter(formatter)
    root_logger.addHandler(error_file_handler)

    # Solver log file (bisection brackets, inverse iteration sweeps)
    solver_file_handler = RotatingFileHandler(
        os.path.join(log_dir, "solver.log"),
        maxBytes=5 * 1024 * 1024,  # 5MB
        backupCount=10,
        encoding='utf-8'
    )
    solver_file_handler.setLevel(logging.DEBUG)
    solver_file_handler.setFormatter(formatter)
    solver_logger.addHandler(solver_file_handler)
    solver_logger.setLevel(logging.DEBUG)

    logging.info(f"Logging system initialized - logs saved to '{log_dir}' directory")
