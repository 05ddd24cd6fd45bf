import shutil
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture
def repo_root():
    return REPO


@pytest.fixture
def cromu_facts():
    return FIXTURES / "cromu38" / "facts"


@pytest.fixture
def minimal_facts():
    return FIXTURES / "minimal" / "facts"


@pytest.fixture
def store(tmp_path):
    from d3re.metadb import MetaDatabase

    return MetaDatabase(tmp_path / "store")


@pytest.fixture
def cromu_session(store, cromu_facts):
    from d3re.session import open_session

    return open_session(store, cromu_facts)


def golden_text(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def fixture_dir(name: str) -> Path:
    return FIXTURES / name
