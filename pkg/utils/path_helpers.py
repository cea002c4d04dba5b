# utils/path_helpers.py
"""
Project path management with type-safe categories.

Provides centralized path management with:
- Type-safe category constants and literals
- Frozen dataclass resolved once per process
- Lookup of user-supplied files with a fallback category (bundled data)
- No fuzzy matching - fail fast on errors
"""

import os
from pathlib import Path
from functools import lru_cache
from dataclasses import dataclass
from typing import Optional, Set, Union, Literal

from utils.exceptions import ConfigurationError, FileOperationError

# Logger imports path_helpers, so nothing here may log.

CategoryType = Literal['config', 'data', 'logs', 'output', 'schemas', 'tmp']


class Dir:
    """
    Directory category constants to prevent typos.

    Use these constants instead of strings:
        Dir.CONFIG instead of 'config'
        Dir.DATA instead of 'data'
    """
    CONFIG: CategoryType = 'config'
    DATA: CategoryType = 'data'
    LOGS: CategoryType = 'logs'
    OUTPUT: CategoryType = 'output'
    SCHEMAS: CategoryType = 'schemas'
    TMP: CategoryType = 'tmp'

    @classmethod
    def all(cls) -> Set[CategoryType]:
        """Get all valid categories."""
        return {cls.CONFIG, cls.DATA, cls.LOGS, cls.OUTPUT, cls.SCHEMAS, cls.TMP}

    @classmethod
    def validate(cls, category: str) -> bool:
        """Check if a category is valid."""
        return category in cls.all()


@dataclass(frozen=True)
class ProjectPaths:
    """
    Container for all project paths. Frozen to prevent accidental modification.

    The root path is taken, in order of precedence, from:
    1. The argument passed to init()
    2. The PROJECT_ROOT environment variable
    3. The parent of the directory containing this file
    """
    __slots__ = ['root', 'config', 'data', 'logs', 'output', 'schemas', 'tmp']

    root: Path
    config: Path
    data: Path
    logs: Path
    output: Path
    schemas: Path
    tmp: Path

    @classmethod
    @lru_cache(maxsize=1)
    def init(cls, root_path: Optional[Path] = None) -> 'ProjectPaths':
        """
        Get singleton instance with cached paths.

        Args:
            root_path: Explicit root directory path

        Returns:
            ProjectPaths instance with all project directory paths configured

        Raises:
            ConfigurationError: If the root path is not a directory
        """
        if root_path is None:
            env_root = os.getenv("PROJECT_ROOT")
            if env_root:
                root_path = Path(env_root)
            else:
                root_path = Path(__file__).resolve().parent.parent

        if not root_path.is_dir():
            raise ConfigurationError(f"Invalid root path: {root_path} is not a directory",
                                     config_key="PROJECT_ROOT")

        return cls(
            root=root_path,
            config=root_path / "config",
            data=root_path / "data",
            logs=root_path / "logs",
            output=root_path / "output",
            schemas=root_path / "schemas",
            tmp=root_path / "tmp",
        )


def get_path(category: CategoryType, filename: str, ensure_parent: bool = True) -> Path:
    """
    Get the full path for a file in a specified category directory.

    Args:
        category: Directory category - must be exact match from Dir constants
        filename: Target filename (e.g., "logging-config.json")
        ensure_parent: If True, create the parent directory if it doesn't exist

    Returns:
        The full path to the file

    Raises:
        ConfigurationError: If the category is not a valid CategoryType

    Example:
        > schema_path = get_path(Dir.SCHEMAS, 'ris-sim-config-schema.json')
    """
    paths = ProjectPaths.init()

    if not Dir.validate(category):
        raise ConfigurationError(
            f"Invalid category '{category}'. "
            f"Must be exactly one of: {', '.join(sorted(Dir.all()))}"
        )

    path = getattr(paths, category) / filename

    if ensure_parent:
        path.parent.mkdir(exist_ok=True, parents=True)

    return path


def resolve_user_path(path: Union[str, Path], fallback: Optional[CategoryType] = None) -> Path:
    """
    Locate a user-supplied input file.

    The path is used as given when it exists; otherwise, when a fallback
    category is named, the bare file name is looked up in that directory.

    Args:
        path: Path as typed by the user
        fallback: Category searched when the path does not exist

    Returns:
        Existing file path

    Raises:
        FileOperationError: If the file cannot be found

    Example:
        > resolve_user_path('s21_measured_digitized.csv', Dir.DATA)
    """
    candidate = Path(path)
    if candidate.is_file():
        return candidate

    if fallback is not None:
        bundled = get_path(fallback, candidate.name, ensure_parent=False)
        if bundled.is_file():
            return bundled

    raise FileOperationError(
        f"Input file not found: {path}",
        file_path=str(path),
        operation="read"
    )
