"""
Schema validation for FTL domain definition files.

Domain files are checked against a Draft 7 JSON schema; missing optional
properties are filled with the schema defaults.
"""

import json
import os
from typing import Any, Dict, Optional

from jsonschema import Draft7Validator, validators

from ..exceptions import DomainError

# Default schema path
DEFAULT_SCHEMA_PATH = os.path.join(os.path.dirname(__file__), "domain_schema.json")

# Cache for loaded schemas
_schema_cache: Dict[str, Dict[str, Any]] = {}


def extend_with_default(validator_class):  # type: ignore[no-untyped-def]
    """Extend jsonschema validator to set default values."""
    validate_properties = validator_class.VALIDATORS["properties"]

    def set_defaults(validator, properties, instance, schema):  # type: ignore[no-untyped-def]
        for name, subschema in properties.items():
            if "default" in subschema and isinstance(instance, dict) and name not in instance:
                instance[name] = subschema["default"]

        yield from validate_properties(validator, properties, instance, schema)

    return validators.extend(validator_class, {"properties": set_defaults})


# Create validator with default value support
DefaultSettingValidator = extend_with_default(Draft7Validator)


def load_schema(schema_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load a JSON schema from a file, with caching.

    Args:
        schema_path: Path to the schema file. If None, uses the domain schema.

    Returns:
        The loaded schema as a dictionary.

    Raises:
        FileNotFoundError: If the schema file does not exist.
        DomainError: If the schema is not valid JSON.
    """
    if schema_path is None:
        schema_path = DEFAULT_SCHEMA_PATH

    if schema_path in _schema_cache:
        return _schema_cache[schema_path]

    try:
        with open(schema_path, "r", encoding="utf-8") as f:
            schema = json.load(f)
    except json.JSONDecodeError as e:
        raise DomainError(f"Invalid JSON schema: {e}")

    _schema_cache[schema_path] = schema
    return schema


def validate_domain_definition(data: Dict[str, Any], schema_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Validate a domain definition and fill in defaults.

    Args:
        data: Parsed JSON content of a domain file
        schema_path: Optional alternative schema

    Returns:
        A copy of the definition with defaults applied

    Raises:
        DomainError: On the first schema violation, naming its JSON path
    """
    schema = load_schema(schema_path)
    instance = dict(data)
    validator = DefaultSettingValidator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise DomainError(f"Invalid domain definition at {where}: {first.message}")
    instance.setdefault("normal_slot", instance["n"])
    if not 1 <= instance["normal_slot"] <= instance["n"]:
        raise DomainError(
            f"Invalid domain definition at normal_slot: {instance['normal_slot']} not in 1..{instance['n']}"
        )
    return instance
