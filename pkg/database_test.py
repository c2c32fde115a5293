import json

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from database import (add_level_results, add_run, delete_run, get_level_results, get_run_by_id, get_run_count,
                      get_runs_by_experiment)
from models import BaseModel


@pytest.fixture
def session():
    engine = create_engine("sqlite:///:memory:")
    BaseModel.metadata.create_all(bind=engine)
    with sessionmaker(bind=engine)() as session:
        yield session


def test_add_and_get_run(session):
    run_id = add_run(session, "example1", {"ladder": [(14, 16)], "sigma": None}, "abc", -0.6, False, "1.0.0")
    run = get_run_by_id(session, run_id)
    assert run.experiment == "example1"
    assert run.slope == -0.6
    assert json.loads(run.config_json) == {"ladder": [[14, 16]], "sigma": None}
    assert get_run_by_id(session, run_id + 1) is None


def test_level_results_order(session):
    run_id = add_run(session, "example4", {}, "abc", None, False, "1.0.0")
    add_level_results(session, run_id, [
        {"dofs": 10496, "s": 0.4984, "j": 1e-12, "iterations": 52, "wall_time": 1.0},
        {"dofs": 3146, "s": None, "j": None, "iterations": None, "wall_time": 0.5, "error": "IsolationError()"},
    ])
    rows = get_level_results(session, run_id)
    assert [row.dofs for row in rows] == [3146, 10496]
    assert rows[0].error == "IsolationError()"
    assert rows[1].iterations == 52


def test_runs_by_experiment_and_delete(session):
    first = add_run(session, "example1", {}, "a", None, False, "1.0.0")
    add_run(session, "example2", {}, "b", None, False, "1.0.0")
    add_level_results(session, first, [{"dofs": 3146, "s": 0.5}])
    assert get_run_count(session) == 2
    assert [run.experiment for run in get_runs_by_experiment(session, "example2")] == ["example2"]
    assert len(get_runs_by_experiment(session)) == 2
    assert len(get_runs_by_experiment(session, limit=1)) == 1
    delete_run(session, first)
    assert get_run_count(session) == 1
    assert get_level_results(session, first) == []
