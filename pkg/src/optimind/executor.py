"""Extract, instrument, and execute generated solver scripts in isolation.

Each script runs in a fresh subprocess with its own working directory.
An appended epilogue prints the objective behind a unique tag so the log
parser does not depend on whatever the model chose to print:

    __OPTIMIND_OBJ__=<repr of objective>
    __OPTIMIND_STATUS__=<infeasible|unbounded>

The epilogue never raises, even when no ``model`` object exists. Parsing
takes the LAST tag occurrence, so duplicate tags are harmless and
instrumenting twice parses identically to instrumenting once.
"""

from __future__ import annotations

import logging
import re
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

from .model import AnswerStatus, NumericAnswer

log = logging.getLogger(__name__)

OBJ_TAG = "__OPTIMIND_OBJ__="
STATUS_TAG = "__OPTIMIND_STATUS__="

_CODE_FENCE = re.compile(r"```python[^\S\n]*\n(.*?)```", re.DOTALL)
_TRACEBACK_MARK = "Traceback (most recent call last"

_EPILOGUE = """

# ---- harness epilogue: emit tagged objective, never raises ----
try:
    import sys as _harness_sys
    # only consult the solver module the script itself imported; never
    # trigger a fresh (slow) solver import for scripts without a model
    _harness_gp = _harness_sys.modules.get("gurobipy")
    _harness_model = globals().get("model")
    if _harness_gp is not None and _harness_model is not None:
        _harness_GRB = _harness_gp.GRB
        _harness_status = getattr(_harness_model, "Status", None)
        if _harness_status is None:
            _harness_status = getattr(_harness_model, "status", None)
        if _harness_status == _harness_GRB.OPTIMAL:
            _harness_obj = getattr(_harness_model, "ObjVal", None)
            if _harness_obj is None:
                _harness_obj = getattr(_harness_model, "objVal", None)
            print("__OPTIMIND_OBJ__=" + repr(float(_harness_obj)))
        elif _harness_status == _harness_GRB.INFEASIBLE:
            print("__OPTIMIND_STATUS__=infeasible")
        elif _harness_status == _harness_GRB.UNBOUNDED:
            print("__OPTIMIND_STATUS__=unbounded")
except Exception:
    pass
"""


class HostEnvironmentError(Exception):
    """The execution host is misconfigured (e.g. interpreter missing)."""


class OutcomeStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    EXEC_ERROR = "exec_error"
    TIMEOUT = "timeout"
    NO_CODE = "no_code"
    NO_OBJECTIVE = "no_objective"


# how an execution outcome shows up in the vote
_ANSWER_STATUS = {
    OutcomeStatus.OPTIMAL: AnswerStatus.OPTIMAL,
    OutcomeStatus.INFEASIBLE: AnswerStatus.INFEASIBLE,
    OutcomeStatus.UNBOUNDED: AnswerStatus.UNBOUNDED,
    OutcomeStatus.EXEC_ERROR: AnswerStatus.ERROR,
    OutcomeStatus.TIMEOUT: AnswerStatus.ERROR,
    OutcomeStatus.NO_OBJECTIVE: AnswerStatus.ERROR,
    OutcomeStatus.NO_CODE: AnswerStatus.MISSING,
}


@dataclass(frozen=True)
class ExecutionOutcome:
    status: OutcomeStatus
    stdout: str = ""
    stderr: str = ""
    objective: float | None = None
    wall_time: float = 0.0

    def __post_init__(self) -> None:
        if (self.objective is not None) != (self.status is OutcomeStatus.OPTIMAL):
            raise ValueError("objective present iff status is optimal")

    def to_answer(self) -> NumericAnswer:
        status = _ANSWER_STATUS[self.status]
        value = self.objective if status is AnswerStatus.OPTIMAL else None
        return NumericAnswer(status=status, value=value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "objective": self.objective,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExecutionOutcome":
        return cls(
            status=OutcomeStatus(data["status"]),
            stdout=data.get("stdout", ""),
            stderr=data.get("stderr", ""),
            objective=data.get("objective"),
            wall_time=data.get("wall_time", 0.0),
        )


@dataclass(frozen=True)
class SampleTrajectory:
    """One model completion and everything derived from it."""

    completion_text: str
    extracted_code: str | None
    outcome: ExecutionOutcome
    answer: NumericAnswer

    def to_dict(self) -> dict[str, Any]:
        return {
            "completion_text": self.completion_text,
            "extracted_code": self.extracted_code,
            "outcome": self.outcome.to_dict(),
            "answer": self.answer.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SampleTrajectory":
        return cls(
            completion_text=data["completion_text"],
            extracted_code=data.get("extracted_code"),
            outcome=ExecutionOutcome.from_dict(data["outcome"]),
            answer=NumericAnswer.from_dict(data["answer"]),
        )


def extract_code_block(completion: str) -> str | None:
    """Interior of the LAST complete ```python fenced block, else None."""
    matches = _CODE_FENCE.findall(completion)
    if not matches:
        return None
    return matches[-1]


def instrument(code: str) -> str:
    """Append the tagged-objective epilogue; the original code is untouched."""
    if not code.strip():
        raise ValueError("cannot instrument empty code")
    return code + _EPILOGUE


def parse_outcome(stdout: str, stderr: str, exit_code: int) -> ExecutionOutcome:
    """Classify an execution from its captured streams and exit code.

    Precedence: crash evidence beats any tag; then the last objective tag;
    then infeasibility/unboundedness markers; otherwise no_objective.
    """
    if exit_code != 0 or _TRACEBACK_MARK in stderr:
        return ExecutionOutcome(status=OutcomeStatus.EXEC_ERROR, stdout=stdout, stderr=stderr)
    obj_token: str | None = None
    status_token: str | None = None
    for line in stdout.splitlines():
        line = line.strip()
        if line.startswith(OBJ_TAG):
            obj_token = line[len(OBJ_TAG):]
        elif line.startswith(STATUS_TAG):
            status_token = line[len(STATUS_TAG):].strip()
    if obj_token is not None:
        try:
            objective = float(obj_token)
        except ValueError:
            log.warning("unparseable objective token %r", obj_token)
            return ExecutionOutcome(
                status=OutcomeStatus.NO_OBJECTIVE, stdout=stdout, stderr=stderr
            )
        return ExecutionOutcome(
            status=OutcomeStatus.OPTIMAL, stdout=stdout, stderr=stderr, objective=objective
        )
    if status_token == "infeasible" or "Model is infeasible" in stdout:
        return ExecutionOutcome(status=OutcomeStatus.INFEASIBLE, stdout=stdout, stderr=stderr)
    if status_token == "unbounded" or "Model is unbounded" in stdout:
        return ExecutionOutcome(status=OutcomeStatus.UNBOUNDED, stdout=stdout, stderr=stderr)
    return ExecutionOutcome(status=OutcomeStatus.NO_OBJECTIVE, stdout=stdout, stderr=stderr)


def execute(
    code: str,
    timeout: float,
    *,
    extra_paths: Sequence[str] = (),
    interpreter: str | None = None,
) -> ExecutionOutcome:
    """Run instrumented code in a fresh subprocess and parse the result.

    ``extra_paths`` are prepended to PYTHONPATH so scripts can resolve the
    solver interface (licensed product or shim) without installing it
    globally. Safe to call concurrently; working directories never collide.
    """
    import os

    python = interpreter or sys.executable
    if shutil.which(python) is None and not Path(python).exists():
        raise HostEnvironmentError(f"interpreter not found: {python}")
    workdir = tempfile.mkdtemp(prefix="optimind_exec_")
    script = Path(workdir) / "script.py"
    script.write_text(instrument(code), encoding="utf-8")
    env = dict(os.environ)
    if extra_paths:
        # the subprocess runs from its own workdir, so relative entries
        # must be anchored here first
        prefix = os.pathsep.join(str(Path(p).resolve()) for p in extra_paths)
        existing = env.get("PYTHONPATH", "")
        env["PYTHONPATH"] = prefix + (os.pathsep + existing if existing else "")
    start = time.monotonic()
    try:
        proc = subprocess.run(
            [python, script.name],
            cwd=workdir,
            capture_output=True,
            timeout=timeout,
            env=env,
            text=True,
            encoding="utf-8",
            errors="replace",
        )
        wall = time.monotonic() - start
        outcome = parse_outcome(
            _normalize_workdir(proc.stdout, workdir),
            _normalize_workdir(proc.stderr, workdir),
            proc.returncode,
        )
        return ExecutionOutcome(
            status=outcome.status,
            stdout=outcome.stdout,
            stderr=outcome.stderr,
            objective=outcome.objective,
            wall_time=wall,
        )
    except subprocess.TimeoutExpired as exc:
        wall = time.monotonic() - start
        return ExecutionOutcome(
            status=OutcomeStatus.TIMEOUT,
            stdout=_normalize_workdir(_coerce_stream(exc.stdout), workdir),
            stderr=_normalize_workdir(_coerce_stream(exc.stderr), workdir),
            wall_time=wall,
        )
    except FileNotFoundError as exc:
        raise HostEnvironmentError(f"interpreter not runnable: {python}") from exc
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def run_sample(
    completion: str,
    timeout: float,
    *,
    extra_paths: Sequence[str] = (),
) -> SampleTrajectory:
    """Extract + instrument + execute one completion into a trajectory."""
    code = extract_code_block(completion)
    if code is None or not code.strip():
        outcome = ExecutionOutcome(status=OutcomeStatus.NO_CODE)
        return SampleTrajectory(
            completion_text=completion,
            extracted_code=None,
            outcome=outcome,
            answer=outcome.to_answer(),
        )
    outcome = execute(code, timeout, extra_paths=extra_paths)
    return SampleTrajectory(
        completion_text=completion,
        extracted_code=code,
        outcome=outcome,
        answer=outcome.to_answer(),
    )


def _coerce_stream(raw: str | bytes | None) -> str:
    if raw is None:
        return ""
    if isinstance(raw, bytes):
        return raw.decode("utf-8", errors="replace")
    return raw


def _normalize_workdir(text: str, workdir: str) -> str:
    """Rewrite the ephemeral working directory to a stable token.

    Tracebacks embed the absolute script path; without this, identical
    runs would produce different captured streams (and different traces).
    """
    if not text:
        return text
    for variant in {workdir, str(Path(workdir).resolve())}:
        text = text.replace(variant, "<workdir>")
    return text
