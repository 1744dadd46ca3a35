from __future__ import annotations

import pytest


@pytest.fixture(autouse=True)
def offline_renderer_env(monkeypatch):
    """The whole suite must run with no API key and no endpoint configured."""
    monkeypatch.delenv("TUTOR_LLM_API_KEY", raising=False)
    monkeypatch.delenv("TUTOR_LLM_ENDPOINT", raising=False)
