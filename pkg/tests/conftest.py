"""Shared fixtures: serial solves and fresh settings per test."""
import pytest

from gapscope.core.config import get_settings


@pytest.fixture(autouse=True)
def serial_settings(monkeypatch):
    monkeypatch.setenv("GAPSCOPE_THREADS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
