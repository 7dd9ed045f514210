"""Harness for turning natural-language optimization problems into executed
MILP solver scripts, with class-aware hints, majority voting, solver-feedback
self-correction, evaluation, and training-data cleaning."""

from .executor import ExecutionOutcome, OutcomeStatus, SampleTrajectory
from .gateway import ChatMessage, Gateway, SamplingParams
from .hints import HintEntry, HintLibrary
from .judge import AnswerCluster, answers_equal, group_answers, is_correct, majority_index
from .model import (
    AnswerStatus,
    DefectCategory,
    NumericAnswer,
    ProblemInstance,
    RunConfig,
    load_benchmark,
    validate_instance,
)
from .orchestrator import InstanceTrace, TurnRecord, run_instance

__version__ = "0.1.0"

__all__ = [
    "AnswerCluster",
    "AnswerStatus",
    "ChatMessage",
    "DefectCategory",
    "ExecutionOutcome",
    "Gateway",
    "HintEntry",
    "HintLibrary",
    "InstanceTrace",
    "NumericAnswer",
    "OutcomeStatus",
    "ProblemInstance",
    "RunConfig",
    "SampleTrajectory",
    "SamplingParams",
    "TurnRecord",
    "answers_equal",
    "group_answers",
    "is_correct",
    "load_benchmark",
    "majority_index",
    "run_instance",
    "validate_instance",
]
