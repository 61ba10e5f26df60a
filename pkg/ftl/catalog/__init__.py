"""
Shipped model domains.

Each JSON file in this directory is a domain definition that can be named
wherever a domain path is accepted (``--domain siegel``).
"""

import os
from typing import List, Optional

CATALOG_DIR = os.path.dirname(__file__)


def catalog_names() -> List[str]:
    """Names of the shipped domains, sorted."""
    return sorted(
        os.path.splitext(entry)[0]
        for entry in os.listdir(CATALOG_DIR)
        if entry.endswith(".json")
    )


def catalog_path(name: str) -> Optional[str]:
    """Path of a shipped domain file, or None when the name is unknown."""
    path = os.path.join(CATALOG_DIR, f"{name}.json")
    return path if os.path.isfile(path) else None


__all__ = ["CATALOG_DIR", "catalog_names", "catalog_path"]
