#!/usr/bin/env python3
"""
Test logger strict mode and configuration validation.

strict=True raises LoggerConfigurationError for tests; the default exits,
because nothing in the simulator runs without logging.
"""

import inspect
import json
import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from utils.exceptions import LoggerConfigurationError
from utils.logger import LOGGER_NAME, RisLogger, setup_logger


def test_default_mode_works():
    """Default mode (strict=False) with the bundled config."""
    print("\n=== Test 1: Default Mode with Valid Config ===")
    logger = setup_logger()
    assert logger is not None
    logger.info("Test message from default mode")
    print("✅ PASS: Default mode works with valid config")


def test_logger_signature():
    sig = inspect.signature(setup_logger)
    assert 'strict' in sig.parameters
    assert sig.parameters['strict'].default is False


def test_logger_is_singleton():
    logger1 = setup_logger()
    logger2 = setup_logger(strict=True)
    assert logger1 is logger2
    assert logger1.logger.name == LOGGER_NAME


def test_missing_config_file_raises(tmp_path):
    with pytest.raises(LoggerConfigurationError) as exc_info:
        RisLogger._load_logging_config(tmp_path / "logging-config.json")
    assert "not found" in str(exc_info.value)
    assert exc_info.value.config_file.endswith("logging-config.json")


def test_invalid_json_raises(tmp_path):
    path = tmp_path / "logging-config.json"
    path.write_text("{ not json")
    with pytest.raises(LoggerConfigurationError, match="Invalid JSON"):
        RisLogger._load_logging_config(path)


@pytest.mark.parametrize("config, message", [
    ([], "must be a JSON object"),
    ({'formatters': {}, 'handlers': {}}, "loggers"),
    ({'formatters': {}, 'handlers': {}, 'loggers': {'other': {}}}, LOGGER_NAME),
])
def test_structure_validation(tmp_path, config, message):
    path = tmp_path / "logging-config.json"
    path.write_text(json.dumps(config))
    with pytest.raises(LoggerConfigurationError, match=message):
        RisLogger._validate_logging_config(config, path)


def test_bundled_config_is_valid():
    path = Path(__file__).parent.parent / "config" / "logging-config.json"
    config = RisLogger._load_logging_config(path)
    RisLogger._validate_logging_config(config, path)
    assert config['handlers']['console']['stream'] == "ext://sys.stderr"
