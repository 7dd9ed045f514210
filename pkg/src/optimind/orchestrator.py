"""Per-instance inference loop: classify, sample, vote, self-correct.

One run makes a classification call, then M turns of K completions each.
Every completion is extracted/instrumented/executed; answers are grouped
under tolerance and the majority sample's stdout/stderr feed the next
turn's correction prompt. A correction reply without a new code block
inherits the previous majority's code, outcome, and answer, matching the
feedback prompt's "no need to provide a new code block" contract.

Ground truth is never visible here; judging is a separate pass so the
same traces yield turn-1 and turn-M numbers without re-running models.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import executor as sandbox
from .executor import SampleTrajectory
from .gateway import ChatMessage, Gateway, GatewayError, SamplingParams, assistant
from .hints import ClassCanonicalizer, HintEntry, HintLibrary, lookup
from .judge import group_answers, majority_index
from .model import AnswerStatus, NumericAnswer, ProblemInstance, RunConfig
from .prompts import (
    build_classification_prompt,
    build_feedback_prompt,
    build_first_turn_prompt,
    parse_class_list,
)

log = logging.getLogger(__name__)


@dataclass
class TurnRecord:
    """One voting round plus the feedback payload that produced it.

    ``fed_stdout``/``fed_stderr`` are the previous majority's streams as
    fed into THIS turn's correction prompt, stored pre-truncation; the
    first turn carries empty strings.
    """

    turn_index: int
    samples: list[SampleTrajectory]
    majority: int | None
    fed_stdout: str
    fed_stderr: str

    def majority_answer(self) -> NumericAnswer:
        if self.majority is None:
            return NumericAnswer(status=AnswerStatus.ERROR)
        return self.samples[self.majority].answer

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn_index": self.turn_index,
            "samples": [s.to_dict() for s in self.samples],
            "majority": self.majority,
            "fed_stdout": self.fed_stdout,
            "fed_stderr": self.fed_stderr,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TurnRecord":
        return cls(
            turn_index=data["turn_index"],
            samples=[SampleTrajectory.from_dict(s) for s in data["samples"]],
            majority=data.get("majority"),
            fed_stdout=data.get("fed_stdout", ""),
            fed_stderr=data.get("fed_stderr", ""),
        )


@dataclass
class InstanceTrace:
    instance_id: str
    predicted_classes: list[str]
    hints_used: list[HintEntry]
    turns: list[TurnRecord]
    final_answer: NumericAnswer
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "predicted_classes": list(self.predicted_classes),
            "hints_used": [h.to_dict() for h in self.hints_used],
            "turns": [t.to_dict() for t in self.turns],
            "final_answer": self.final_answer.to_dict(),
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "InstanceTrace":
        return cls(
            instance_id=data["instance_id"],
            predicted_classes=list(data.get("predicted_classes", [])),
            hints_used=[HintEntry.from_dict(h) for h in data.get("hints_used", [])],
            turns=[TurnRecord.from_dict(t) for t in data["turns"]],
            final_answer=NumericAnswer.from_dict(data["final_answer"]),
            flags=list(data.get("flags", [])),
        )


def classify(
    instance: ProblemInstance,
    gateway: Gateway,
    cfg: RunConfig,
    *,
    canonicalizer: ClassCanonicalizer | None = None,
    examples: Mapping[str, str] | None = None,
) -> tuple[list[str], list[str]]:
    """Predict the instance's class names; degrade to hint-less on failure.

    Returns (names, flags). Canonical taxonomy names are substituted where
    they resolve; anything else is kept verbatim as a free label.
    """
    canon = canonicalizer or ClassCanonicalizer()
    if examples is None:
        examples = _default_examples()
    messages = build_classification_prompt(instance.question, canon.taxonomy, examples)
    params = SamplingParams(
        temperature=cfg.temperature, top_p=cfg.top_p, max_tokens=cfg.max_tokens, n=1
    )
    try:
        reply = gateway.complete(messages, params)[0]
    except GatewayError as exc:
        log.warning("classification failed for %s: %s", instance.id, exc)
        return [], [f"classification_failed: {exc}"]
    try:
        parsed = parse_class_list(reply)
    except ValueError as exc:
        return [], [f"classification_unparseable: {exc}"]
    names: list[str] = []
    flags: list[str] = []
    for name in parsed.names:
        resolved = canon.resolve(name)
        if resolved is None:
            flags.append(f"free_label: {name}")
            names.append(name)
        else:
            names.append(resolved)
    return names, flags


def run_instance(
    instance: ProblemInstance,
    cfg: RunConfig,
    lib: HintLibrary,
    gateway: Gateway,
    *,
    canonicalizer: ClassCanonicalizer | None = None,
    examples: Mapping[str, str] | None = None,
) -> InstanceTrace:
    """Drive the full multi-turn loop for one instance.

    Per-sample and per-turn failures are recorded in the trace; only
    configuration problems raise. The loop never stops early on a
    promising answer - correctness is judged downstream, per turn.
    """
    canon = canonicalizer or ClassCanonicalizer()
    classes, flags = classify(
        instance, gateway, cfg, canonicalizer=canon, examples=examples
    )
    hints = lookup(lib, classes, canon) if cfg.hints_enabled else []
    first_turn = build_first_turn_prompt(instance.question, hints if hints else None)
    conversation: list[ChatMessage] = list(first_turn)
    params = SamplingParams(
        temperature=cfg.temperature, top_p=cfg.top_p, max_tokens=cfg.max_tokens, n=cfg.K
    )

    turns: list[TurnRecord] = []
    fed_stdout = ""
    fed_stderr = ""
    prev_majority: SampleTrajectory | None = None
    for turn_index in range(cfg.M):
        if turn_index > 0:
            feedback = build_feedback_prompt(
                fed_stdout, fed_stderr, budget_bytes=cfg.feedback_budget_bytes
            )
            conversation = conversation + [
                _assistant_message(prev_majority),
                feedback[0],
            ]
        try:
            completions = gateway.complete(conversation, params)
        except GatewayError as exc:
            log.warning("turn %d sampling failed for %s: %s", turn_index, instance.id, exc)
            flags.append(f"turn_{turn_index}_gateway_failure: {exc}")
            completions = []
        samples = _materialize_samples(
            completions, cfg, inherit_from=prev_majority if turn_index > 0 else None
        )
        clusters = group_answers(
            [s.answer for s in samples],
            cfg.tolerance_rel,
            cfg.tolerance_abs,
            strict_and=cfg.strict_tolerance_and,
        )
        majority = majority_index(clusters)
        turns.append(
            TurnRecord(
                turn_index=turn_index,
                samples=samples,
                majority=majority,
                fed_stdout=fed_stdout,
                fed_stderr=fed_stderr,
            )
        )
        # the chosen sample's streams feed forward; when every sample
        # failed, fall back to the first raw trajectory so the model still
        # sees the dominant failure
        if majority is not None:
            chosen: SampleTrajectory | None = samples[majority]
        elif samples:
            chosen = samples[0]
        else:
            chosen = None
        if chosen is not None:
            fed_stdout = chosen.outcome.stdout
            fed_stderr = chosen.outcome.stderr
        else:
            fed_stdout = ""
            fed_stderr = ""
        prev_majority = chosen

    return InstanceTrace(
        instance_id=instance.id,
        predicted_classes=classes,
        hints_used=list(hints),
        turns=turns,
        final_answer=turns[-1].majority_answer(),
        flags=flags,
    )


def _materialize_samples(
    completions: Sequence[str],
    cfg: RunConfig,
    *,
    inherit_from: SampleTrajectory | None,
) -> list[SampleTrajectory]:
    """Extract/instrument/execute each completion, concurrently.

    In correction turns a completion without a code block inherits the
    previous majority's code/outcome/answer instead of executing.
    """

    def build(completion: str) -> SampleTrajectory:
        if inherit_from is not None and sandbox.extract_code_block(completion) is None:
            return SampleTrajectory(
                completion_text=completion,
                extracted_code=inherit_from.extracted_code,
                outcome=inherit_from.outcome,
                answer=inherit_from.answer,
            )
        return sandbox.run_sample(
            completion, cfg.exec_timeout, extra_paths=cfg.solver_paths
        )

    if not completions:
        return []
    if len(completions) == 1 or cfg.workers <= 1:
        return [build(c) for c in completions]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(build, completions))


def _assistant_message(trajectory: SampleTrajectory | None) -> ChatMessage:
    text = trajectory.completion_text if trajectory is not None else ""
    return assistant(text if text.strip() else "(no solution was produced)")


def _default_examples() -> Mapping[str, str]:
    import yaml
    from importlib import resources

    text = resources.files("optimind.templates").joinpath("class_examples.yaml").read_text(
        "utf-8"
    )
    data = yaml.safe_load(text) or {}
    return {str(k): str(v) for k, v in data.items()}


def write_traces(traces: Iterable[InstanceTrace], path: str | Path) -> None:
    """One full trace record per line, completions included, for audit."""
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace.to_dict(), ensure_ascii=False) + "\n")


def read_traces(path: str | Path) -> list[InstanceTrace]:
    traces = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                traces.append(InstanceTrace.from_dict(json.loads(line)))
    return traces
