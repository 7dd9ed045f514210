"""The shim behind the harness executor: PYTHONPATH wiring + tag grammar."""

from __future__ import annotations

from pathlib import Path

import pytest

optimind = pytest.importorskip("optimind")

from optimind.executor import OutcomeStatus, execute  # noqa: E402

SHIM_SRC = str(Path(__file__).parent.parent / "src")
HERE = Path(__file__).parent


def test_executor_parses_shim_solve():
    code = (
        "import gurobipy as gp\n"
        "from gurobipy import GRB\n"
        "model = gp.Model('mix')\n"
        "a = model.addVar(ub=4)\n"
        "b = model.addVar()\n"
        "model.setObjective(30*a + 10*b, GRB.MAXIMIZE)\n"
        "model.addConstr(6*a + 3*b <= 40)\n"
        "model.addConstr(b >= 3*a)\n"
        "model.optimize()\n"
    )
    outcome = execute(code, 60, extra_paths=[SHIM_SRC])
    assert outcome.status is OutcomeStatus.OPTIMAL
    assert outcome.objective == pytest.approx(160.0, abs=1e-6)
    assert "Optimal solution found" in outcome.stdout


def test_executor_classifies_shim_infeasibility():
    code = (
        "import gurobipy as gp\n"
        "from gurobipy import GRB\n"
        "model = gp.Model()\n"
        "x = model.addVar(ub=0)\n"
        "model.addConstr(x >= 1)\n"
        "model.setObjective(x)\n"
        "model.optimize()\n"
    )
    outcome = execute(code, 60, extra_paths=[SHIM_SRC])
    assert outcome.status is OutcomeStatus.INFEASIBLE


def test_executor_classifies_unsupported_feature_as_exec_error():
    code = (
        "import gurobipy as gp\n"
        "from gurobipy import GRB\n"
        "model = gp.Model()\n"
        "x = model.addVar()\n"
        "model.setObjective(x * x)\n"
        "model.optimize()\n"
    )
    outcome = execute(code, 60, extra_paths=[SHIM_SRC])
    assert outcome.status is OutcomeStatus.EXEC_ERROR
    assert "UnsupportedFeatureError" in outcome.stderr


def test_reference_script_through_executor():
    source = (HERE / "reference_production_planning.py").read_text(encoding="utf-8")
    outcome = execute(source, 120, extra_paths=[SHIM_SRC])
    assert outcome.status is OutcomeStatus.OPTIMAL
    assert "Optimal Solution Found!" in outcome.stdout
