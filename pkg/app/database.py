import os
from typing import Optional
from sqlalchemy.engine import Engine
from sqlmodel import SQLModel, create_engine, Session

# Importing the table models registers them with the metadata.
from app.models import StoredCheckRecord, VerificationRun  # noqa: F401

_engine: Optional[Engine] = None
_url: Optional[str] = None


def configured_url() -> Optional[str]:
    """Explicitly configured URL, falling back to APP_DATABASE_URL"""
    return _url or os.environ.get("APP_DATABASE_URL")


def is_enabled() -> bool:
    return configured_url() is not None


def configure(url: Optional[str]) -> None:
    """Point the run-history store at a new URL; None reverts to the environment"""
    global _engine, _url
    if _engine is not None:
        _engine.dispose()
    _engine = None
    _url = url


def get_engine() -> Engine:
    global _engine
    if _engine is None:
        url = configured_url()
        if url is None:
            raise RuntimeError("No database configured; set APP_DATABASE_URL or pass --db")
        connect_args = {"check_same_thread": False} if url.startswith("sqlite") else {"connect_timeout": 15}
        _engine = create_engine(url, connect_args=connect_args)
    return _engine


def create_tables():
    SQLModel.metadata.create_all(get_engine())


def get_session():
    return Session(get_engine())


def reset_db():
    """Wipe all tables in the database. Use with caution - for testing only!"""
    SQLModel.metadata.drop_all(get_engine())
    SQLModel.metadata.create_all(get_engine())
