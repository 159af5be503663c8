"""Shared helpers for the test suite."""

from __future__ import annotations

from thrillette.engine.runner import run


def run_all(job, p: int = 1, **kwargs) -> list:
    """All worker results of a mock run, rank order."""
    return run(job, hosts=1, workers_per_host=p, **kwargs)


def run_one(job, p: int = 1, **kwargs):
    """Rank 0's result of a mock run."""
    return run_all(job, p=p, **kwargs)[0]


def agreed(job, p: int = 1, **kwargs):
    """Runs the job and asserts every worker returned the same value."""
    results = run_all(job, p=p, **kwargs)
    for other in results[1:]:
        assert other == results[0]
    return results[0]
