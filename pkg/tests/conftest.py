# tests/conftest.py
"""Shared fixtures: project root on sys.path and a default layout."""

import sys
from pathlib import Path

import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.geometry import ArrayLayout  # noqa: E402

DATA_DIR = Path(__file__).parent.parent / "data"


@pytest.fixture
def default_layout() -> ArrayLayout:
    return ArrayLayout()


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
