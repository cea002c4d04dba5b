# utils/load_n_save.py
"""
Data handler for simulator inputs and artifacts.

Provides file I/O with:
- Category directories (Dir.*) or explicit output directories
- pandas CSV loading with '#' comments and per-column fixed formatting on save
- Flat key=value text files for configs and result blocks
- Deterministic output: UTF-8, '\\n' line endings, fixed numeric precision
- Comprehensive error handling
"""

import json
import math
import threading
from pathlib import Path
from typing import Union, Dict, Any, Optional, Mapping, Callable

import numpy as np
import pandas as pd

from utils.logger import setup_logger
from utils.path_helpers import CategoryType, get_path
from utils.exceptions import FileOperationError, ValidationError

logger = setup_logger()

Location = Union[CategoryType, Path]
ColumnFormat = Union[str, Callable[[Any], str]]


def _format_scalar(value: Any) -> str:
    """Render one key=value entry with fixed precision."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return f"{value:.6f}"
    return str(value)


class RisDataHandler:
    """
    Data I/O handler with specialized methods per file type.

    Every method accepts either a project category (Dir.*) or an explicit
    directory Path, so the CLI can write to any --out location.
    """

    _file_lock = threading.Lock()

    DEFAULT_ENCODING = 'utf-8'
    LINE_TERMINATOR = '\n'

    @staticmethod
    def resolve(directory: Location, filename: str, ensure_parent: bool = False) -> Path:
        """
        Resolve a category or explicit directory plus filename to a path.

        Args:
            directory: Category name or directory Path
            filename: File name (may contain sub-directories)
            ensure_parent: Create the parent directory if missing

        Returns:
            Full file path
        """
        if isinstance(directory, Path):
            path = directory / filename
            if ensure_parent:
                path.parent.mkdir(parents=True, exist_ok=True)
            return path
        return get_path(directory, filename, ensure_parent=ensure_parent)

    # ==================== Load Methods ====================

    @staticmethod
    def load_json(directory: Location, filename: str) -> Union[Dict[str, Any], list]:
        """
        Load JSON file with proper error handling.

        Raises:
            FileOperationError: If file cannot be read
            ValidationError: If JSON is invalid
        """
        file_path = RisDataHandler.resolve(directory, filename)
        logger.debug(f"Loading JSON from {file_path}")

        try:
            with open(file_path, 'r', encoding=RisDataHandler.DEFAULT_ENCODING) as f:
                return json.load(f)
        except FileNotFoundError:
            raise FileOperationError(
                f"JSON file not found: {filename}",
                file_path=str(file_path),
                operation='load'
            )
        except json.JSONDecodeError as e:
            raise ValidationError(f"Invalid JSON in {filename}: {e}", field='json_content')
        except OSError as e:
            raise FileOperationError(
                f"Failed to read JSON file: {e}",
                file_path=str(file_path),
                operation='load'
            )

    @staticmethod
    def load_text(directory: Location, filename: str) -> str:
        """
        Load a UTF-8 text file.

        Raises:
            FileOperationError: If file cannot be read or decoded
        """
        file_path = RisDataHandler.resolve(directory, filename)
        logger.debug(f"Loading text file from {file_path}")

        try:
            content = file_path.read_text(encoding=RisDataHandler.DEFAULT_ENCODING)
            logger.debug(f"Loaded text from {file_path} ({len(content):,} chars)")
            return content
        except FileNotFoundError:
            raise FileOperationError(
                f"Text file not found: {file_path}",
                file_path=str(file_path),
                operation='load'
            )
        except (OSError, UnicodeDecodeError) as e:
            raise FileOperationError(
                f"Failed to read text file {file_path}: {e}",
                file_path=str(file_path),
                operation='load'
            )

    @staticmethod
    def load_csv(directory: Location, filename: str,
                 required_columns: Optional[list] = None) -> pd.DataFrame:
        """
        Load a CSV file, skipping '#' comment lines.

        Args:
            directory: Source category or directory
            filename: CSV filename
            required_columns: Column names that must be present

        Returns:
            DataFrame with the file contents

        Raises:
            FileOperationError: If file cannot be read or parsed
            ValidationError: If a required column is missing
        """
        file_path = RisDataHandler.resolve(directory, filename)
        logger.debug(f"Loading CSV from {file_path}")

        try:
            df = pd.read_csv(file_path, comment='#', skipinitialspace=True,
                             encoding=RisDataHandler.DEFAULT_ENCODING)
        except FileNotFoundError:
            raise FileOperationError(
                f"CSV file not found: {file_path}",
                file_path=str(file_path),
                operation='load'
            )
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise FileOperationError(
                f"Failed to load CSV file {file_path}: {e}",
                file_path=str(file_path),
                operation='load'
            )

        df.columns = [str(c).strip() for c in df.columns]
        if required_columns:
            missing = [c for c in required_columns if c not in df.columns]
            if missing:
                raise ValidationError(
                    f"CSV file {file_path.name} is missing column(s): {', '.join(missing)}",
                    field=missing[0]
                )

        logger.info(f"Loaded CSV from {file_path} ({len(df)} rows)")
        return df

    @staticmethod
    def load_binary(directory: Location, filename: str) -> bytes:
        """
        Load raw bytes.

        Raises:
            FileOperationError: If file cannot be read
        """
        file_path = RisDataHandler.resolve(directory, filename)
        try:
            return file_path.read_bytes()
        except OSError as e:
            raise FileOperationError(
                f"Failed to read binary file {file_path}: {e}",
                file_path=str(file_path),
                operation='load'
            )

    @staticmethod
    def load_key_value(directory: Location, filename: str) -> Dict[str, str]:
        """
        Load a flat key=value text file.

        Blank lines and lines starting with '#' are ignored; keys and values
        are stripped of surrounding whitespace.

        Returns:
            Mapping of key to raw string value, in file order

        Raises:
            FileOperationError: If the file cannot be read
            ValidationError: If a line lacks '=' or a key repeats
        """
        content = RisDataHandler.load_text(directory, filename)
        values: Dict[str, str] = {}

        for line_no, raw in enumerate(content.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ValidationError(
                    f"{filename}: line {line_no} is not a key=value pair: {raw!r}"
                )
            key, value = (part.strip() for part in line.split('=', 1))
            if not key:
                raise ValidationError(f"{filename}: line {line_no} has an empty key")
            if key in values:
                raise ValidationError(f"{filename}: duplicate key '{key}' on line {line_no}", field=key)
            values[key] = value

        logger.debug(f"Loaded {len(values)} key=value entries from {filename}")
        return values

    # ==================== Save Methods ====================

    @staticmethod
    def save_text(content: str, directory: Location, filename: str) -> Path:
        """
        Save text content as UTF-8 with '\\n' line endings.

        Returns:
            Path to saved file

        Raises:
            FileOperationError: If file cannot be written
        """
        file_path = RisDataHandler.resolve(directory, filename, ensure_parent=True)

        try:
            with RisDataHandler._file_lock:
                with open(file_path, 'w', encoding=RisDataHandler.DEFAULT_ENCODING,
                          newline=RisDataHandler.LINE_TERMINATOR) as f:
                    f.write(content)
            logger.info(f"Saved {file_path} ({len(content):,} chars)")
            return file_path
        except OSError as e:
            raise FileOperationError(
                f"Failed to save text file {file_path}: {e}",
                file_path=str(file_path),
                operation='save'
            )

    @staticmethod
    def save_binary(data: bytes, directory: Location, filename: str) -> Path:
        """
        Save raw bytes.

        Raises:
            FileOperationError: If file cannot be written
        """
        file_path = RisDataHandler.resolve(directory, filename, ensure_parent=True)

        try:
            file_path.write_bytes(data)
            logger.info(f"Saved {file_path} ({len(data)} bytes)")
            return file_path
        except OSError as e:
            raise FileOperationError(
                f"Failed to save binary file {file_path}: {e}",
                file_path=str(file_path),
                operation='save'
            )

    @staticmethod
    def format_csv(df: pd.DataFrame,
                   formats: Optional[Mapping[str, ColumnFormat]] = None,
                   header: bool = True) -> str:
        """
        Render a DataFrame as CSV text with fixed per-column formatting.

        Args:
            df: Data to render
            formats: Column name to printf-style format ("%.4f") or callable
            header: Whether to write the header row

        Returns:
            CSV text using '\\n' line endings
        """
        rendered = df.copy()
        for column, fmt in (formats or {}).items():
            formatter = fmt if callable(fmt) else (lambda v, f=fmt: f % v)
            rendered[column] = rendered[column].map(formatter)
        return rendered.to_csv(index=False, header=header,
                               lineterminator=RisDataHandler.LINE_TERMINATOR)

    @staticmethod
    def save_csv(df: pd.DataFrame, directory: Location, filename: str,
                 formats: Optional[Mapping[str, ColumnFormat]] = None,
                 header: bool = True) -> Path:
        """
        Save a DataFrame as CSV with deterministic formatting.

        Returns:
            Path to saved file
        """
        content = RisDataHandler.format_csv(df, formats=formats, header=header)
        return RisDataHandler.save_text(content, directory, filename)

    @staticmethod
    def format_key_value(values: Mapping[str, Any]) -> str:
        """
        Render a flat mapping as key=value lines.

        Floats use 6 decimals, infinities render as inf / -inf, booleans as
        true / false.
        """
        return "".join(f"{key}={_format_scalar(value)}\n" for key, value in values.items())

    @staticmethod
    def save_key_value(values: Mapping[str, Any], directory: Location, filename: str) -> Path:
        """Save a flat mapping as a key=value text block."""
        return RisDataHandler.save_text(RisDataHandler.format_key_value(values), directory, filename)
