"""Shared pytest fixtures."""

from pathlib import Path

import pytest

import qpwalk


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return Path(qpwalk.__file__).parent / "fixtures"
