"""Shared fixtures; puts the tool directory on sys.path like evaluator.py does."""

import sys
from pathlib import Path

import numpy as np
import pytest

TOOL_DIR = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(TOOL_DIR))

from scenarios import builtin_scenarios  # noqa: E402


@pytest.fixture(scope="session")
def suite():
    return builtin_scenarios()


@pytest.fixture(scope="session")
def regional(suite):
    return suite.get("regional")


@pytest.fixture(scope="session")
def national(suite):
    return suite.get("national")


@pytest.fixture(scope="session")
def semi_national(suite):
    return suite.get("semi-national")


@pytest.fixture(scope="session")
def fully_distributed(suite):
    return suite.get("fully-distributed")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def scenario_dir():
    return TOOL_DIR / "scenario_files"
