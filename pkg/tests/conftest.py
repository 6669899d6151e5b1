"""Shared test fixtures for qqlab tests."""

import pytest

from src.rng import Rng


@pytest.fixture
def rng() -> Rng:
    """A fixed-seed stream; each test gets a fresh one."""
    return Rng(20240601)


@pytest.fixture
def mock_env(monkeypatch):
    """Helper to set environment variables for config tests."""

    def _set(**kwargs):
        for key, value in kwargs.items():
            monkeypatch.setenv(key, value)

    return _set


@pytest.fixture
def staircase_f():
    """The 2-to-one-per-half function (1,1,1,1,2,2,2,2) with N = 2."""
    from src.models import OracleFunction, Promise

    return OracleFunction(n=8, N=2, promise=Promise.r_to_one(4), values=(1, 1, 1, 1, 2, 2, 2, 2))
