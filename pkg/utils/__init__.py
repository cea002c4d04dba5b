# utils/__init__.py
"""Shared infrastructure for the RIS simulator: logging, paths, config, I/O, errors."""

__version__ = '1.0.0'

# Convenience imports for most common utilities
from .logger import setup_logger
from .load_n_save import RisDataHandler
from .script_runner import ScriptRunner, ArgumentDefinition
from .exceptions import HelpfulError, RisSimError, ValidationError

__all__ = [
    'setup_logger',
    'RisDataHandler',
    'ScriptRunner',
    'ArgumentDefinition',
    'HelpfulError',
    'RisSimError',
    'ValidationError',
]
