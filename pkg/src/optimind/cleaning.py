"""Semi-automated training-data cleaning: balance, regenerate, infill, export.

The pipeline mirrors the inference path on purpose: regeneration runs one
hinted turn with a large sample count and keeps the majority completion,
so the exported dataset is produced by exactly the machinery it will
later be evaluated with. Expert question edits arrive as patch files;
nothing here rewrites questions silently.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .executor import SampleTrajectory, extract_code_block, run_sample
from .gateway import Gateway, GatewayError, SamplingParams
from .hints import ClassCanonicalizer, HintLibrary, lookup
from .judge import answers_equal, group_answers, majority_index
from .model import AnswerStatus, NumericAnswer, RunConfig
from .orchestrator import _materialize_samples  # same execution path as inference
from .prompts import build_first_turn_prompt, build_infill_prompt

log = logging.getLogger(__name__)

NO_MISSING_DATA = "NO MISSING DATA"


class Provenance(str, Enum):
    ORIGINAL = "original"
    REGENERATED = "regenerated"
    INFILLED_QUESTION = "infilled_question"
    EXPERT_EDITED = "expert_edited"


@dataclass
class TrainingItem:
    id: str
    question: str
    original_answer: float | None = None
    regenerated_answer: NumericAnswer | None = None
    completion: str | None = None
    class_labels: tuple[str, ...] = ()
    provenance: Provenance = Provenance.ORIGINAL
    resolved: bool = False
    original_question: str | None = None  # pre-infill text kept for audit
    needs_review: bool = False

    @property
    def primary_class(self) -> str:
        return self.class_labels[0] if self.class_labels else "unclassified"

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "question": self.question,
            "class_labels": list(self.class_labels),
            "provenance": self.provenance.value,
            "resolved": self.resolved,
        }
        if self.original_answer is not None:
            out["original_answer"] = self.original_answer
        if self.regenerated_answer is not None:
            out["regenerated_answer"] = self.regenerated_answer.to_dict()
        if self.completion is not None:
            out["completion"] = self.completion
        if self.original_question is not None:
            out["original_question"] = self.original_question
        if self.needs_review:
            out["needs_review"] = True
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrainingItem":
        regen = data.get("regenerated_answer")
        return cls(
            id=str(data["id"]),
            question=str(data["question"]),
            original_answer=data.get("original_answer"),
            regenerated_answer=NumericAnswer.from_dict(regen) if regen else None,
            completion=data.get("completion"),
            class_labels=tuple(data.get("class_labels", [])),
            provenance=Provenance(data.get("provenance", "original")),
            resolved=bool(data.get("resolved", False)),
            original_question=data.get("original_question"),
            needs_review=bool(data.get("needs_review", False)),
        )


def load_training_items(path: str | Path) -> list[TrainingItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                items.append(TrainingItem.from_dict(json.loads(line)))
    return items


def dump_training_items(items: Iterable[TrainingItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_dict(), ensure_ascii=False) + "\n")


def balance_classes(
    items: Sequence[TrainingItem], cap: int = 100, *, seed: int = 0
) -> list[TrainingItem]:
    """Uniformly sample at most ``cap`` items per class with a fixed seed."""
    if cap <= 0:
        return []
    by_class: dict[str, list[int]] = {}
    for idx, item in enumerate(items):
        by_class.setdefault(item.primary_class, []).append(idx)
    rng = random.Random(seed)
    chosen: set[int] = set()
    for name in sorted(by_class):
        indices = by_class[name]
        if len(indices) <= cap:
            chosen.update(indices)
        else:
            chosen.update(rng.sample(indices, cap))
    return [items[i] for i in sorted(chosen)]


def regenerate_solutions(
    items: Sequence[TrainingItem],
    cfg: RunConfig,
    lib: HintLibrary,
    gateway: Gateway,
    *,
    canonicalizer: ClassCanonicalizer | None = None,
) -> list[TrainingItem]:
    """One hinted turn with cfg.K samples per item; majority completion wins.

    An item resolves when the vote lands on an optimal answer, or failing
    that when its original completion still executes to an optimal result.
    Gateway failures leave the item unresolved rather than aborting.
    """
    canon = canonicalizer or ClassCanonicalizer()
    params = SamplingParams(
        temperature=cfg.temperature, top_p=cfg.top_p, max_tokens=cfg.max_tokens, n=cfg.K
    )
    out: list[TrainingItem] = []
    for item in items:
        hints = lookup(lib, item.class_labels, canon)
        messages = build_first_turn_prompt(item.question, hints if hints else None)
        try:
            completions = gateway.complete(messages, params)
        except GatewayError as exc:
            log.warning("regeneration sampling failed for %s: %s", item.id, exc)
            out.append(_resolve_via_original(item, cfg))
            continue
        samples = _materialize_samples(completions, cfg, inherit_from=None)
        clusters = group_answers(
            [s.answer for s in samples], cfg.tolerance_rel, cfg.tolerance_abs
        )
        winner = majority_index(clusters)
        majority: SampleTrajectory | None = samples[winner] if winner is not None else None
        if majority is not None and majority.answer.status is AnswerStatus.OPTIMAL:
            out.append(
                replace(
                    item,
                    regenerated_answer=majority.answer,
                    completion=majority.completion_text,
                    provenance=Provenance.REGENERATED,
                    resolved=True,
                )
            )
        else:
            out.append(_resolve_via_original(item, cfg))
    return out


def _resolve_via_original(item: TrainingItem, cfg: RunConfig) -> TrainingItem:
    """Fall back to the item's own completion, if it still runs to optimal."""
    if item.resolved:
        return item
    if item.completion and extract_code_block(item.completion):
        trajectory = run_sample(
            item.completion, cfg.exec_timeout, extra_paths=cfg.solver_paths
        )
        if trajectory.answer.status is AnswerStatus.OPTIMAL:
            return replace(item, resolved=True, provenance=Provenance.ORIGINAL)
    return replace(item, resolved=False)


def filter_unresolved(
    items: Sequence[TrainingItem],
) -> tuple[list[TrainingItem], list[TrainingItem]]:
    """Split resolved items from the ones nothing could validate."""
    kept = [i for i in items if i.resolved]
    dropped = [i for i in items if not i.resolved]
    for item in dropped:
        log.info("dropping unresolved item %s", item.id)
    return kept, dropped


def detect_and_infill_missing(
    item: TrainingItem, gateway: Gateway, cfg: RunConfig
) -> TrainingItem:
    """Ask the repair model whether the solution invented missing parameters.

    The sentinel reply leaves the item untouched. Replies that shrink the
    question by more than half are flagged for manual review instead of
    trusted.
    """
    if not item.completion:
        return item
    messages = build_infill_prompt(item.question, item.completion)
    params = SamplingParams(
        temperature=cfg.temperature, top_p=cfg.top_p, max_tokens=cfg.max_tokens, n=1
    )
    try:
        reply = gateway.complete(messages, params)[0].strip()
    except GatewayError as exc:
        log.warning("infill call failed for %s: %s", item.id, exc)
        return replace(item, needs_review=True)
    if reply == NO_MISSING_DATA:
        return item
    if not reply or len(reply) < 0.5 * len(item.question):
        log.warning("implausible infill reply for %s; flagged for review", item.id)
        return replace(item, needs_review=True)
    return replace(
        item,
        question=reply,
        original_question=item.question,
        provenance=Provenance.INFILLED_QUESTION,
    )


def apply_expert_patches(
    items: Sequence[TrainingItem], patches: Sequence[Mapping[str, str]]
) -> list[TrainingItem]:
    """Apply before/after question edits authored by experts.

    Each patch is {id, before, after}; ``before`` must match the current
    question exactly, so stale patches fail loudly instead of silently.
    """
    by_id = {p["id"]: p for p in patches}
    out: list[TrainingItem] = []
    for item in items:
        patch = by_id.get(item.id)
        if patch is None:
            out.append(item)
            continue
        if item.question != patch["before"]:
            raise ValueError(f"patch for {item.id!r} does not match current question")
        out.append(
            replace(
                item,
                question=patch["after"],
                original_question=item.question,
                provenance=Provenance.EXPERT_EDITED,
            )
        )
    return out


def load_patches(path: str | Path) -> list[dict[str, str]]:
    patches = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                patches.append(
                    {"id": record["id"], "before": record["before"], "after": record["after"]}
                )
    return patches


def export_sft_dataset(items: Sequence[TrainingItem], path: str | Path) -> int:
    """Write (question, completion) pairs, one record per line."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            if not item.completion:
                log.warning("skipping %s: no completion to export", item.id)
                continue
            answer = (
                item.regenerated_answer.value
                if item.regenerated_answer is not None
                and item.regenerated_answer.status is AnswerStatus.OPTIMAL
                else item.original_answer
            )
            record = {
                "question": item.question,
                "completion": item.completion,
                "answer": answer,
                "class": item.primary_class,
                "provenance": item.provenance.value,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count


def load_sft_dataset(path: str | Path) -> list[dict[str, Any]]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


@dataclass
class CleaningSummary:
    input_count: int
    balanced_count: int
    kept_count: int
    dropped_count: int
    infilled_count: int
    relabeled_count: int  # kept items whose regenerated answer disagrees
    exported_count: int

    def to_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


def count_relabeled(items: Sequence[TrainingItem], cfg: RunConfig) -> int:
    """Kept items whose regenerated answer differs from the original label."""
    count = 0
    for item in items:
        if (
            item.resolved
            and item.original_answer is not None
            and item.regenerated_answer is not None
            and item.regenerated_answer.status is AnswerStatus.OPTIMAL
            and not answers_equal(
                item.regenerated_answer.value,
                item.original_answer,
                cfg.tolerance_rel,
                cfg.tolerance_abs,
            )
        ):
            count += 1
    return count


def clean_pipeline(
    items: Sequence[TrainingItem],
    cfg: RunConfig,
    lib: HintLibrary,
    gateway: Gateway,
    out_dir: str | Path,
    *,
    cap: int = 100,
    seed: int = 0,
    infill_gateway: Gateway | None = None,
    patches: Sequence[Mapping[str, str]] = (),
) -> CleaningSummary:
    """Full pass: balance, regenerate, infill, patch, filter, export.

    ``infill_gateway`` lets the missing-data stage use a different model
    than regeneration. Every mutation is appended to an audit log.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    audit = open(out_dir / "audit.jsonl", "w", encoding="utf-8")

    def note(event: str, **fields: Any) -> None:
        audit.write(json.dumps({"event": event, **fields}, ensure_ascii=False) + "\n")

    try:
        balanced = balance_classes(items, cap, seed=seed)
        note("balance", before=len(items), after=len(balanced), cap=cap)
        regenerated = regenerate_solutions(balanced, cfg, lib, gateway)
        for before, after in zip(balanced, regenerated):
            if after.provenance is not before.provenance or after.resolved != before.resolved:
                note(
                    "regenerate",
                    id=after.id,
                    resolved=after.resolved,
                    provenance=after.provenance.value,
                )
        infilled = [
            detect_and_infill_missing(item, infill_gateway or gateway, cfg)
            for item in regenerated
        ]
        infill_count = 0
        for before, after in zip(regenerated, infilled):
            if after.question != before.question:
                infill_count += 1
                note("infill", id=after.id)
        patched = apply_expert_patches(infilled, patches) if patches else infilled
        for before, after in zip(infilled, patched):
            if after.question != before.question:
                note("expert_edit", id=after.id)
        kept, dropped = filter_unresolved(patched)
        for item in dropped:
            note("drop_unresolved", id=item.id)
        dump_training_items(kept, out_dir / "cleaned.jsonl")
        exported = export_sft_dataset(kept, out_dir / "sft.jsonl")
        relabeled = count_relabeled(kept, cfg)
        note(
            "summary",
            kept=len(kept),
            dropped=len(dropped),
            relabeled=relabeled,
            exported=exported,
        )
        return CleaningSummary(
            input_count=len(items),
            balanced_count=len(balanced),
            kept_count=len(kept),
            dropped_count=len(dropped),
            infilled_count=infill_count,
            relabeled_count=relabeled,
            exported_count=exported,
        )
    finally:
        audit.close()
