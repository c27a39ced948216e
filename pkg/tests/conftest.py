from typing import Generator

import pytest

from app import database


@pytest.fixture
def sqlite_url(tmp_path) -> Generator[str, None, None]:
    """Point the run-history store at a throwaway SQLite file"""
    url = f"sqlite:///{tmp_path / 'history.db'}"
    database.configure(url)
    yield url
    database.configure(None)
