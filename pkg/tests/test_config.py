from pathlib import Path

import pytest
from pydantic import ValidationError

from costcast.core.config import BASE_DIR, Settings, get_settings
from costcast.core.parallel import derive_seed, resolve_threads, run_parallel, task_rng


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("COSTCAST_THREADS", "3")
    monkeypatch.setenv("COSTCAST_BOOTSTRAP_REPS", "250")
    get_settings.cache_clear()
    settings = get_settings()
    assert settings.THREADS == 3 and settings.BOOTSTRAP_REPS == 250
    assert resolve_threads() == 3
    assert resolve_threads(1) == 1


def test_settings_are_cached():
    assert get_settings() is get_settings()


def test_relative_study_dir_resolves_under_package(monkeypatch):
    monkeypatch.setenv("COSTCAST_STUDY_DIR", "runs/here")
    settings = Settings()
    assert Path(settings.STUDY_DIR) == BASE_DIR / "runs" / "here"


def test_threads_must_be_positive(monkeypatch):
    monkeypatch.setenv("COSTCAST_THREADS", "0")
    with pytest.raises(ValidationError):
        Settings()


def test_task_rng_and_derived_seeds_are_stable():
    assert task_rng(5, 2).integers(1 << 30) == task_rng(5, 2).integers(1 << 30)
    assert derive_seed(1, "iv_forest", 0) == derive_seed(1, "iv_forest", 0)
    assert derive_seed(1, "iv_forest") != derive_seed(1, "ignore_cost")


def test_run_parallel_keeps_input_order():
    assert run_parallel(lambda i: i * i, range(20), threads=4) == [i * i for i in range(20)]
