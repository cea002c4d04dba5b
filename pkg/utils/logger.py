# utils/logger.py
"""
Thread-safe singleton logger for the RIS simulator.

This module provides centralized logging with:
- MANDATORY logging configuration from config/logging-config.json
- Hard fail if the configuration is missing or invalid
- UTC timestamps by default
- Quiet on success, verbose on failure

No defaults, no fallbacks - configuration is mandatory.

Raises:
    LoggerConfigurationError: When logger configuration is missing or invalid
"""

import logging
import logging.config
import json
import os
import sys
import time
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Any

from utils.path_helpers import get_path
from utils.exceptions import LoggerConfigurationError

LOGGER_NAME = 'RisSim'


class UTCFormatter(logging.Formatter):
    """Formatter that uses UTC timestamps."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.converter = time.gmtime


def _config_failure(headline: str, config_path: Path, error: Any = None) -> LoggerConfigurationError:
    """Build the banner-style error raised for every configuration problem."""
    lines = [
        '=' * 60,
        "CRITICAL CONFIGURATION ERROR",
        headline,
        f"File: {config_path}",
    ]
    if error is not None:
        lines.append(f"Error: {error}")
    lines.append('=' * 60)
    return LoggerConfigurationError(message="\n" + "\n".join(lines), config_file=str(config_path))


class RisLogger:
    """
    Thread-safe singleton logger for the application.

    Will exit(1) through setup_logger() if the configuration is not properly set.
    """

    _instance = None
    _lock = threading.Lock()

    def __new__(cls):
        """Ensure only one instance exists."""
        with cls._lock:
            if cls._instance is None:
                cls._instance = super().__new__(cls)
                cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """
        Initialize logger if not already initialized.

        Raises:
            LoggerConfigurationError: If logging configuration is missing or invalid
        """
        with self._lock:
            if not self._initialized:
                if os.getenv('DEBUG_LOGGING'):
                    print("[DEBUG] Initializing RisLogger...", file=sys.stderr)

                self.logger = logging.getLogger(LOGGER_NAME)
                self._setup_logger()
                self._initialized = True
                self.logger.debug("RisLogger initialized successfully")

    @staticmethod
    def _load_logging_config(config_path: Path) -> Dict[str, Any]:
        """
        Load and parse logging configuration JSON file.

        Args:
            config_path: Path to logging-config.json

        Returns:
            Parsed configuration dictionary

        Raises:
            LoggerConfigurationError: If file missing or invalid JSON
        """
        if not config_path.exists():
            raise _config_failure("Logging configuration file not found!", config_path)

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise _config_failure("Invalid JSON in logging configuration!", config_path, e)
        except OSError as e:
            raise _config_failure("Failed to read logging configuration!", config_path, e)

    @staticmethod
    def _validate_logging_config(config: Dict[str, Any], config_path: Path) -> None:
        """
        Validate logging configuration structure and required sections.

        Raises:
            LoggerConfigurationError: If configuration invalid or incomplete
        """
        if not isinstance(config, dict):
            raise _config_failure("Logging config must be a JSON object!", config_path)

        missing_sections = [s for s in ('formatters', 'handlers', 'loggers') if s not in config]
        if missing_sections:
            raise _config_failure(
                f"Missing required sections in logging config: {', '.join(missing_sections)}",
                config_path
            )

        if LOGGER_NAME not in config['loggers']:
            raise _config_failure(
                f"'{LOGGER_NAME}' logger not configured! Add it to the 'loggers' section.",
                config_path
            )

    def _apply_runtime_modifications(self, config: Dict[str, Any], config_path: Path) -> None:
        """
        Redirect file handlers to today's log file, force UTC and apply the config.

        Raises:
            LoggerConfigurationError: If modifications fail
        """
        try:
            date_str = datetime.now(timezone.utc).strftime("%Y-%m-%d")
            log_path = str(get_path('logs', f"ris_sim_{date_str}.log"))

            for handler_name, handler_config in config['handlers'].items():
                if handler_config['class'].endswith('FileHandler'):
                    handler_config['filename'] = log_path
                    if os.getenv('DEBUG_LOGGING'):
                        print(f"[DEBUG] Set {handler_name} path to {log_path}", file=sys.stderr)

            for formatter_name in config['formatters']:
                config['formatters'][formatter_name]['()'] = UTCFormatter

            logging.config.dictConfig(config)
            self.logger = logging.getLogger(LOGGER_NAME)

            if os.getenv('DEBUG_LOGGING'):
                print(f"[DEBUG] Logging configured from {config_path}", file=sys.stderr)

        except Exception as e:
            raise _config_failure("Failed to apply logging configuration!", config_path, e)

    def _setup_logger(self) -> None:
        """
        Set up logger from the MANDATORY configuration file.

        Raises:
            LoggerConfigurationError: If logging configuration is missing or invalid
        """
        config_path = get_path('config', 'logging-config.json')
        config = self._load_logging_config(config_path)
        self._validate_logging_config(config, config_path)
        self._apply_runtime_modifications(config, config_path)

    # Logging methods
    def debug(self, msg: str, *args, **kwargs) -> None:
        self.logger.debug(msg, *args, **kwargs)

    def info(self, msg: str, *args, **kwargs) -> None:
        self.logger.info(msg, *args, **kwargs)

    def warning(self, msg: str, *args, **kwargs) -> None:
        self.logger.warning(msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        self.logger.error(msg, *args, **kwargs)

    def exception(self, msg: str, *args, **kwargs) -> None:
        """Log exception with traceback."""
        self.logger.exception(msg, *args, **kwargs)


def setup_logger(strict: bool = False) -> RisLogger:
    """
    Get configured logger instance.

    The logger is infrastructure: if it fails, the application cannot
    continue, so the default behavior exits on error.

    Args:
        strict: If True, raises exceptions (for testing). If False (default),
                exits with sys.exit(1) on configuration errors.

    Returns:
        Configured RisLogger instance

    Raises:
        LoggerConfigurationError: If logging config missing/invalid (only when strict=True)

    Debug Mode:
        Set DEBUG_LOGGING=1 to see initialization details:
        $ DEBUG_LOGGING=1 python -m src.ris_sim codebook
    """
    try:
        return RisLogger()
    except LoggerConfigurationError as e:
        if strict:
            raise
        # The only sys.exit() in library code: nothing can run without logging.
        print(f"\n{'=' * 60}", file=sys.stderr)
        print("FATAL: Logger initialization failed", file=sys.stderr)
        print(f"{'=' * 60}", file=sys.stderr)
        print(f"\n{e}\n", file=sys.stderr)
        print("Application cannot continue without logging.", file=sys.stderr)
        print(f"{'=' * 60}\n", file=sys.stderr)
        sys.exit(1)
