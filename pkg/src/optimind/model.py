"""Core domain types: problem instances, run configuration, numeric answers.

Benchmark files are UTF-8 with one JSON record per line so they stream
cleanly and diff per-instance. Ground truths are kept as the decimal
strings found in the file and compared numerically downstream; they are
never re-rounded on load.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable


class BenchmarkError(Exception):
    """Raised when a benchmark file cannot be loaded."""


class DefectCategory(str, Enum):
    MISSING_DATA = "missing_data"
    AMBIGUOUS_DESCRIPTION = "ambiguous_description"
    INTEGRAL_VS_FRACTIONAL = "integral_vs_fractional"
    WRONG_SOLUTION = "wrong_solution"
    INFEASIBLE = "infeasible"
    OUT_OF_SCOPE = "out_of_scope"


class AnswerStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ERROR = "error"
    MISSING = "missing"


@dataclass(frozen=True)
class NumericAnswer:
    """Objective value extracted from one solver run, or why there is none."""

    status: AnswerStatus
    value: float | None = None

    def __post_init__(self) -> None:
        if self.status is AnswerStatus.OPTIMAL:
            if self.value is None or not math.isfinite(self.value):
                raise ValueError("optimal answer requires a finite value")
        elif self.value is not None:
            raise ValueError(f"value must be absent for status {self.status.value}")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"status": self.status.value}
        if self.value is not None:
            out["value"] = self.value
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NumericAnswer":
        return cls(status=AnswerStatus(data["status"]), value=data.get("value"))


@dataclass(frozen=True)
class ProblemInstance:
    """One natural-language question with its reference annotations.

    ``ground_truths`` may hold several accepted optima (e.g. the integer and
    the fractional reading of an ambiguous question). ``extra`` preserves
    unknown record fields opaquely for annotation tooling.
    """

    id: str
    question: str
    ground_truths: tuple[float, ...]
    class_labels: tuple[str, ...] = ()
    issue_flags: frozenset[DefectCategory] = frozenset()
    source: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def out_of_scope(self) -> bool:
        return DefectCategory.OUT_OF_SCOPE in self.issue_flags

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.id,
            "question": self.question,
            "ground_truths": list(self.ground_truths),
        }
        if self.class_labels:
            record["class_labels"] = list(self.class_labels)
        if self.issue_flags:
            record["issue_flags"] = sorted(f.value for f in self.issue_flags)
        record["source"] = self.source
        record.update(self.extra)
        return record

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProblemInstance":
        known = {"id", "question", "ground_truths", "class_labels", "issue_flags", "source"}
        try:
            flags = frozenset(DefectCategory(f) for f in data.get("issue_flags", []))
        except ValueError as exc:
            raise BenchmarkError(f"unknown issue flag: {exc}") from exc
        return cls(
            id=str(data["id"]),
            question=str(data["question"]),
            ground_truths=tuple(float(v) for v in data.get("ground_truths", [])),
            class_labels=tuple(str(c) for c in data.get("class_labels", [])),
            issue_flags=flags,
            source=str(data.get("source", "")),
            extra={k: v for k, v in data.items() if k not in known},
        )


@dataclass
class RunConfig:
    """Everything one evaluation run needs, loadable from a YAML/JSON file.

    K is the number of samples voted over per turn; M the total number of
    turns including the first. Tolerances feed both answer grouping and
    ground-truth judging.
    """

    K: int = 8
    M: int = 5
    temperature: float = 0.6
    top_p: float = 0.95
    max_tokens: int = 60000
    tolerance_rel: float = 1e-6
    tolerance_abs: float = 1e-6
    hints_enabled: bool = True
    seed_count: int = 1
    exec_timeout: float = 60.0
    model_endpoint: str = ""
    model_name: str = ""
    # plumbing knobs beyond the core contract
    api_key_env: str = "OPTIMIND_API_KEY"
    feedback_budget_bytes: int = 32768
    class_floor_pct: float = 2.5
    workers: int = 2
    instance_workers: int = 1
    solver_paths: list[str] = field(default_factory=list)
    strict_tolerance_and: bool = False

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.tolerance_rel <= 0 or self.tolerance_abs <= 0:
            raise ValueError("tolerances must be > 0")
        if self.seed_count < 1:
            raise ValueError("seed_count must be >= 1")
        if self.exec_timeout <= 0:
            raise ValueError("exec_timeout must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.K,
            "M": self.M,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "tolerance_rel": self.tolerance_rel,
            "tolerance_abs": self.tolerance_abs,
            "hints_enabled": self.hints_enabled,
            "seed_count": self.seed_count,
            "exec_timeout": self.exec_timeout,
            "model_endpoint": self.model_endpoint,
            "model_name": self.model_name,
            "api_key_env": self.api_key_env,
            "feedback_budget_bytes": self.feedback_budget_bytes,
            "class_floor_pct": self.class_floor_pct,
            "workers": self.workers,
            "instance_workers": self.instance_workers,
            "solver_paths": list(self.solver_paths),
            "strict_tolerance_and": self.strict_tolerance_and,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        allowed = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        import yaml

        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"config root must be a mapping: {path}")
        return cls.from_dict(data)

    def with_overrides(self, **kwargs: Any) -> "RunConfig":
        return replace(self, **kwargs)


def load_benchmark(path: str | Path) -> list[ProblemInstance]:
    """Load a line-delimited benchmark file, enforcing unique ids."""
    path = Path(path)
    instances: list[ProblemInstance] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh]
    if not any(ln.strip() for ln in lines):
        raise BenchmarkError(f"benchmark file is empty: {path}")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BenchmarkError(f"{path}:{lineno}: malformed record: {exc}") from exc
        if not isinstance(record, dict):
            raise BenchmarkError(f"{path}:{lineno}: record must be an object")
        try:
            instance = ProblemInstance.from_dict(record)
        except (KeyError, TypeError, ValueError) as exc:
            raise BenchmarkError(f"{path}:{lineno}: invalid record: {exc}") from exc
        if instance.id in seen:
            raise BenchmarkError(f"{path}:{lineno}: duplicate instance id {instance.id!r}")
        seen.add(instance.id)
        instances.append(instance)
    return instances


def dump_benchmark(instances: Iterable[ProblemInstance], path: str | Path) -> None:
    """Write instances back out, one record per line, in the given order."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), ensure_ascii=False) + "\n")


def validate_instance(instance: ProblemInstance) -> list[str]:
    """Return human-readable findings; empty means evaluable and well formed."""
    findings: list[str] = []
    if not instance.id:
        findings.append("id empty")
    if not instance.question.strip():
        findings.append("question empty")
    if instance.out_of_scope:
        findings.append("excluded: out_of_scope")
    elif not instance.ground_truths:
        findings.append("ground_truths empty")
    for truth in instance.ground_truths:
        if not math.isfinite(truth):
            findings.append(f"ground truth not finite: {truth!r}")
    return findings
