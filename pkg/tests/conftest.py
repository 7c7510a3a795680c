import os

import pytest

from polyaprofile.acceptance import AcceptanceContext
from polyaprofile.constants import compute_constants
from polyaprofile.enumeration import count_trees

CACHE_DIR = os.path.join(os.path.dirname(__file__), ".cache")


@pytest.fixture(scope="session")
def cache_dir():
    return CACHE_DIR


@pytest.fixture(scope="session")
def constants_400():
    return compute_constants(400, degrees=(1, 2, 3))


@pytest.fixture(scope="session")
def table_400():
    return count_trees(400, cache_dir=CACHE_DIR)


@pytest.fixture(scope="session")
def acceptance_ctx():
    """Full-size acceptance context shared by the criterion tests."""
    return AcceptanceContext(quick=False, cache_dir=CACHE_DIR, threads=1)
