"""Smoke tests for the SQLModel setup and the run configuration schema."""

import pytest
from pydantic import ValidationError
from sqlalchemy import inspect
from sqlmodel import SQLModel

from app.database import create_tables, get_engine
from app.models import CheckStatus, EnsembleKind, EnsembleSpec, RunConfig


def test_sqlmodel_smoke(sqlite_url):
    """Single smoke test to validate SQLModel setup works end-to-end."""

    create_tables()

    db_tables = set(inspect(get_engine()).get_table_names())

    # Verify we have tables and they match our models
    assert len(db_tables) > 0, "No tables found in database"

    for table_name in SQLModel.metadata.tables:
        assert table_name in db_tables, f"Table '{table_name}' not found in database"


def test_run_config_defaults():
    """An empty config validates with the default tolerances and cap"""
    config = RunConfig.model_validate({})
    assert config.checks == []
    assert config.n_cap == 12
    assert config.tolerances.relative == 1e-9
    assert config.tolerances.absolute == 1e-12
    assert config.witness.restarts == 8


def test_run_config_rejects_ensembles_over_cap():
    """Ensembles above n_cap fail validation"""
    with pytest.raises(ValidationError):
        RunConfig.model_validate({"n_cap": 3, "ensembles": [{"kind": "subcube", "n": 4}]})
    with pytest.raises(ValidationError):
        EnsembleSpec.model_validate({"kind": "subcube", "n": 13})


def test_ensemble_label():
    """Labels list params in key order"""
    spec = EnsembleSpec(kind=EnsembleKind.CLASSICAL, n=3, params={"site": 2, "function": "dictator"}, seed=7)
    assert spec.label() == "classical[n=3,function=dictator,site=2,seed=7]"


def test_status_values():
    """Status strings are the ones written to records.jsonl"""
    assert {status.value for status in CheckStatus} == {"holds", "violated", "skipped_precondition", "degenerate"}
