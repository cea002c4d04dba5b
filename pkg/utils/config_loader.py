# utils/config_loader.py
"""
Flat key=value configuration loading with JSON Schema validation.

Handles run configs and link scenarios with:
- Schema-declared types, ranges and defaults (schemas/*.json)
- Text-to-type coercion driven by the schema
- Precedence: schema defaults < file values < explicit overrides
- Thread-safe loader cache
"""
import threading
from pathlib import Path
from typing import Dict, Any, Optional, Mapping
from weakref import WeakValueDictionary

import jsonschema

from utils.exceptions import ConfigurationError, ValidationError, FileOperationError, ErrorContext
from utils.logger import setup_logger
from utils.load_n_save import RisDataHandler

logger = setup_logger()
data_handler = RisDataHandler()

_loader_cache: WeakValueDictionary = WeakValueDictionary()
_cache_lock = threading.Lock()

_TRUE_WORDS = {'true', '1', 'yes', 'on'}
_FALSE_WORDS = {'false', '0', 'no', 'off'}
_NULL_WORDS = {'', 'none', 'null'}


class KeyValueConfigLoader:
    """
    Loader for one kind of flat key=value configuration file.

    Example:
        > loader = get_config_loader('ris-sim-config-schema.json')
        > config = loader.load(Path('config/ris-sim-config_example.txt'), {'freq_ghz': 6.0})
    """

    __slots__ = ['schema_filename', '_schema', '_lock', '__weakref__']

    def __init__(self, schema_filename: str) -> None:
        """
        Args:
            schema_filename: Name of the schema file in schemas/
        """
        self.schema_filename = schema_filename
        self._schema: Optional[Dict[str, Any]] = None
        self._lock = threading.Lock()

    @property
    def schema(self) -> Dict[str, Any]:
        """The JSON Schema, loaded on first use."""
        with self._lock:
            if self._schema is None:
                try:
                    self._schema = data_handler.load_json('schemas', self.schema_filename)
                except FileOperationError as e:
                    logger.error(f"❌ CRITICAL: Schema file not found: {self.schema_filename}")
                    raise ConfigurationError(
                        f"Schema file not found: {self.schema_filename}",
                        context=ErrorContext(operation="schema_load", resource=self.schema_filename)
                    ) from e
            return self._schema

    @property
    def properties(self) -> Dict[str, Any]:
        return self.schema.get('properties', {})

    def defaults(self) -> Dict[str, Any]:
        """Schema defaults for every key that declares one."""
        return {key: prop['default'] for key, prop in self.properties.items() if 'default' in prop}

    def coerce(self, key: str, value: Any) -> Any:
        """
        Convert a raw text value to the type the schema declares for key.

        Non-string values pass through unchanged; unknown keys are left as
        text so that schema validation reports them.

        Raises:
            ValidationError: If the text cannot be read as the declared type
        """
        if not isinstance(value, str) or key not in self.properties:
            return value

        declared = self.properties[key].get('type', 'string')
        types = declared if isinstance(declared, list) else [declared]
        text = value.strip()

        if 'null' in types and text.lower() in _NULL_WORDS:
            return None

        for kind in types:
            try:
                if kind == 'integer':
                    return int(text)
                if kind == 'number':
                    return float(text)
                if kind == 'boolean':
                    lowered = text.lower()
                    if lowered in _TRUE_WORDS:
                        return True
                    if lowered in _FALSE_WORDS:
                        return False
                    continue
                if kind == 'string':
                    return text
            except ValueError:
                continue

        raise ValidationError(
            f"Invalid value for '{key}': {value!r} is not of type {' or '.join(types)}",
            field=key,
            value=value
        )

    def validate(self, data: Dict[str, Any]) -> None:
        """
        Validate data against the schema.

        Raises:
            ValidationError: Naming the first offending key
        """
        validator = jsonschema.Draft7Validator(self.schema)
        errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
        if not errors:
            logger.debug(f"✅ Schema validation successful: {self.schema_filename}")
            return

        error = errors[0]
        if error.absolute_path:
            field = ".".join(str(p) for p in error.absolute_path)
        elif error.validator == 'additionalProperties':
            unknown = sorted(set(data) - set(self.properties))
            field = unknown[0] if unknown else "root"
        else:
            field = "root"

        logger.error(f"❌ Schema validation failed at '{field}': {error.message}")
        raise ValidationError(
            f"Invalid value for '{field}': {error.message}",
            field=field,
            value=data.get(field),
            context=ErrorContext(
                operation="schema_validation",
                resource=self.schema_filename,
                details={"error_path": field, "validation_message": error.message}
            )
        )

    def load(self, path: Optional[Path] = None,
             overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
        """
        Build a validated configuration.

        Args:
            path: Optional key=value file
            overrides: Values that win over the file (command-line flags)

        Returns:
            Merged, typed and validated configuration

        Raises:
            FileOperationError: If the file cannot be read
            ValidationError: If a value has the wrong type or range
        """
        config = self.defaults()

        if path is not None:
            raw = data_handler.load_key_value(path.parent, path.name)
            config.update({key: self.coerce(key, value) for key, value in raw.items()})
            logger.info(f"Loaded config: {path}")

        for key, value in (overrides or {}).items():
            if value is not None:
                config[key] = self.coerce(key, value)

        self.validate(config)
        return config

    def __repr__(self) -> str:
        return f"KeyValueConfigLoader(schema_filename='{self.schema_filename}')"


def get_config_loader(schema_filename: str, use_cache: bool = True) -> KeyValueConfigLoader:
    """
    Get or create a loader for a schema.

    Args:
        schema_filename: Schema file in schemas/
        use_cache: Whether to reuse an existing loader

    Returns:
        KeyValueConfigLoader instance
    """
    if not use_cache:
        return KeyValueConfigLoader(schema_filename)

    with _cache_lock:
        loader = _loader_cache.get(schema_filename)
        if loader is None:
            loader = KeyValueConfigLoader(schema_filename)
            _loader_cache[schema_filename] = loader
            logger.debug(f"Created and cached loader for {schema_filename}")
        return loader
