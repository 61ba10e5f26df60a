"""
Schema module for FTL.

This module provides the JSON schema of domain definition files and its validator.
"""

from .validation import DEFAULT_SCHEMA_PATH, load_schema, validate_domain_definition

__all__ = ["DEFAULT_SCHEMA_PATH", "load_schema", "validate_domain_definition"]
