from __future__ import annotations

import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(FIXTURES))

from optimind.model import RunConfig  # noqa: E402


@pytest.fixture(scope="session")
def stub_solver_path() -> str:
    return str(FIXTURES / "solver_stub")


@pytest.fixture()
def fast_cfg(stub_solver_path: str) -> RunConfig:
    """Config tuned for mock-driven tests: small timeouts, stub solver."""
    return RunConfig(
        K=1,
        M=1,
        seed_count=1,
        exec_timeout=30.0,
        workers=2,
        solver_paths=[stub_solver_path],
        model_endpoint="http://mock",
        model_name="mock-model",
    )
