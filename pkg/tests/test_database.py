"""Tests for the results ledger."""

import math
import os
import tempfile

import pytest

from fairrank.database import ResultsStore
from fairrank.scores import SolverReport


@pytest.fixture
def store():
    """Create a temporary ledger for testing."""
    with tempfile.NamedTemporaryFile(suffix=".db", delete=False) as f:
        db_path = f.name
    ledger = ResultsStore(db_path)
    yield ledger
    ledger.engine.dispose()
    os.unlink(db_path)


def _report(method="gmres", mass=0.3):
    return SolverReport(
        method=method,
        outer_iterations=3,
        inner_iterations_total=42,
        final_residual=1e-11,
        achieved_protected_mass=mass,
        wall_time_seconds=0.25,
    )


def test_record_run(store):
    """Test storing a solver run."""
    run = store.record_run("gmres", "abc123", 100, 800, 0.15, _report(), target=0.3)

    assert run.id is not None
    assert run.method == "gmres"
    assert run.inner_iterations_total == 42
    assert run.target == 0.3
    assert run.created_at is not None


def test_nan_mass_is_stored_as_null(store):
    run = store.record_run("power", "abc123", 100, 800, 0.15, _report("power", math.nan))

    assert run.achieved_protected_mass is None


def test_recent_runs_newest_first(store):
    """Test that recent runs come back newest first and respect the limit."""
    for method in ("exact", "gmres", "meanfield"):
        store.record_run(method, "abc123", 100, 800, 0.15, _report(method))

    runs = store.recent_runs(limit=2)

    assert [r.method for r in runs] == ["meanfield", "gmres"]


def test_runs_for_graph(store):
    store.record_run("exact", "graph-a", 10, 20, 0.15, _report("exact"))
    store.record_run("gmres", "graph-b", 10, 20, 0.15, _report())
    store.record_run("gmres", "graph-a", 10, 20, 0.15, _report())

    runs = store.runs_for_graph("graph-a")

    assert [r.method for r in runs] == ["exact", "gmres"]
    assert store.runs_for_graph("graph-c") == []


def test_timing_summary(store):
    """Test that only successful timings are averaged, per method."""
    store.record_timing("n=100", 100, 800, "gmres", "ok", 1.0)
    store.record_timing("n=200", 200, 1600, "gmres", "ok", 3.0)
    store.record_timing("n=9000", 9000, 72000, "exact", "CAP", math.nan)

    summary = store.timing_summary()

    assert summary == [{"method": "gmres", "runs": 2, "mean_seconds": 2.0}]


def test_cap_timing_has_no_wall_time(store):
    timing = store.record_timing("n=9000", 9000, 72000, "exact", "CAP", math.nan)

    assert timing.status == "CAP"
    assert timing.wall_time_seconds is None
