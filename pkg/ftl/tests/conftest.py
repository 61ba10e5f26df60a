"""
Shared fixtures for the FTL tests.

Catalog domains are built once per session with a small Levi spot-check
sample; everything they cache (rho, frames, jets) is immutable.
"""

import os
import tempfile

import numpy as np
import pytest

from ftl.domains import load_domain, tangent_frame


@pytest.fixture(scope="session")
def siegel():
    """Siegel upper half-space in C^3."""
    return load_domain("siegel", levi_samples=32)


@pytest.fixture(scope="session")
def herbort():
    """Herbort's example; the normal variable is z1 in the file."""
    return load_domain("herbort", levi_samples=32)


@pytest.fixture(scope="session")
def decoupled():
    """Decoupled domain of type (4, 6)."""
    return load_domain("decoupled", levi_samples=32)


@pytest.fixture(scope="session")
def rotated():
    """Decoupled-type domain in rotated coordinates."""
    return load_domain("rotated", levi_samples=32)


@pytest.fixture(scope="session")
def siegel_frame(siegel):
    return tangent_frame(siegel)


@pytest.fixture(scope="session")
def herbort_frame(herbort):
    return tangent_frame(herbort)


@pytest.fixture
def origin3():
    return np.zeros(3, dtype=complex)


@pytest.fixture
def temp_dir():
    """Temporary directory removed after the test."""
    with tempfile.TemporaryDirectory() as path:
        yield path


@pytest.fixture(autouse=True)
def _no_seed_env(monkeypatch):
    monkeypatch.delenv("FTL_SEED", raising=False)
    yield


def write_file(directory: str, name: str, text: str) -> str:
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path
