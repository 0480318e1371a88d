from pathlib import Path

import pytest

from scalesim.data import WDBC_FEATURE_NAMES, load_wdbc
from scalesim.profiles import ColumnType, SchemaDescriptor

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def wdbc_path() -> Path:
    path = REPO_ROOT / "data" / "wdbc.csv"
    assert path.is_file(), "data/wdbc.csv missing; run scripts/export_wdbc.py"
    return path


@pytest.fixture(scope="session")
def wdbc(wdbc_path):
    return load_wdbc(wdbc_path)


@pytest.fixture(scope="session")
def wdbc_schema() -> SchemaDescriptor:
    return SchemaDescriptor([(name, ColumnType.NUMERIC) for name in WDBC_FEATURE_NAMES])
