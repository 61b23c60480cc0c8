import pytest


@pytest.fixture(autouse=True)
def no_seed_override(monkeypatch):
    """Keep a SOFTCIRCUIT_SEED from the calling shell out of every test."""
    monkeypatch.delenv("SOFTCIRCUIT_SEED", raising=False)
