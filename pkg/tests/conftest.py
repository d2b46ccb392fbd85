"""Shared fixtures: scripted sessions over the committed LLM fixtures.

Tests run the engine in scripted provider mode against the files under
``fixtures/llm``. Setting DATASTEER_RECORD_FIXTURES=1 patches the
provider so that a missing fixture is filled in by the deterministic
fake model and written to disk, then replayed; running the suite once
with the flag regenerates the corpus after any prompt change. Without
the flag, drift fails loudly as FixtureMissing.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

import datasteer.repair as repair_module
from datasteer.errors import FixtureMissing
from datasteer.execution import KernelConfig, KernelManager
from datasteer.provider import ProviderConfig, fixture_path, request_hash
from datasteer.session import Session, add_dataset, create_session

from .fakellm import FakeLLM

FIXTURE_ROOT = Path(__file__).parent / "fixtures"
LLM_FIXTURES = FIXTURE_ROOT / "llm"
DATASET_DIR = FIXTURE_ROOT / "datasets"

TASK_FILES = (
    "big-basket-products.csv",
    "anime-list.csv",
    "korean-drama.csv",
    "data-science-job-salaries.csv",
    "bollywood-movies.csv",
    "euroleague-basketball.csv",
)

RECORDING = bool(os.environ.get("DATASTEER_RECORD_FIXTURES"))

LLM_FIXTURES.mkdir(parents=True, exist_ok=True)


@pytest.fixture(autouse=True)
def record_missing_fixtures(monkeypatch):
    """In recording mode, answer fixture misses with the fake model."""
    if not RECORDING:
        yield
        return
    fake = FakeLLM()
    real_complete = repair_module.complete

    def recording_complete(messages, config):
        try:
            return real_complete(messages, config)
        except FixtureMissing:
            raw = fake.respond(list(messages))
            path = fixture_path(config.fixture_dir, request_hash(list(messages)))
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(raw, encoding="utf-8")
            return raw

    monkeypatch.setattr(repair_module, "complete", recording_complete)
    yield


def scripted_provider(
    max_retries: int = 2, fixture_dir: str | None = None
) -> ProviderConfig:
    return ProviderConfig(
        mode="scripted",
        model_name="scripted",
        max_retries=max_retries,
        fixture_dir=str(LLM_FIXTURES) if fixture_dir is None else fixture_dir,
    )


def make_session(
    strategy: str,
    task_files: tuple[str, ...] = ("big-basket-products.csv",),
    max_subgoals: int = 10,
    session_id: str | None = None,
    fixture_dir: str | None = None,
    max_retries: int = 2,
) -> Session:
    session = create_session(
        strategy,
        provider=scripted_provider(max_retries, fixture_dir),
        kernel=KernelConfig(backend="stub"),
        max_subgoals=max_subgoals,
        session_id=session_id,
    )
    for filename in task_files:
        raw = (DATASET_DIR / filename).read_bytes()
        add_dataset(session, filename, raw)
    return session


@pytest.fixture
def manager():
    mgr = KernelManager(KernelConfig(backend="stub"))
    yield mgr
    mgr.shutdown()
