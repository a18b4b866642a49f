import pytest


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Route experiment output to a temporary directory."""
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    return tmp_path / "out"
