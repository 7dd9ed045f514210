from __future__ import annotations

import json

import pytest

from optimind.cleaning import (
    NO_MISSING_DATA,
    Provenance,
    TrainingItem,
    apply_expert_patches,
    balance_classes,
    clean_pipeline,
    count_relabeled,
    detect_and_infill_missing,
    dump_training_items,
    export_sft_dataset,
    filter_unresolved,
    load_sft_dataset,
    load_training_items,
    regenerate_solutions,
)
from optimind.gateway import ScriptedGateway
from optimind.hints import HintLibrary
from optimind.model import AnswerStatus, NumericAnswer


def tagged(value: float) -> str:
    return f"s\n```python\nprint('__OPTIMIND_OBJ__={value!r}')\n```\n"


CRASH = "s\n```python\nraise ValueError('bad model')\n```\n"
NO_CODE = "I could not produce code for this."


def item(i: int, cls: str = "Knapsack", **kwargs) -> TrainingItem:
    return TrainingItem(
        id=f"t{i}", question=f"training question {i}", class_labels=(cls,), **kwargs
    )


# -------------------------------------------------------------- balance_classes

def test_balance_caps_large_class():
    items = [item(i, "Knapsack") for i in range(250)]
    balanced = balance_classes(items, 100, seed=3)
    assert len(balanced) == 100
    assert balanced == balance_classes(items, 100, seed=3)  # fixed seed
    assert balanced != balance_classes(items, 100, seed=4)


def test_balance_keeps_small_class_whole():
    items = [item(i, "Set Cover") for i in range(40)]
    assert balance_classes(items, 100) == items


def test_balance_cap_zero_empty():
    assert balance_classes([item(0)], 0) == []


def test_balance_mixed_classes():
    items = [item(i, "A") for i in range(150)] + [item(200 + i, "B") for i in range(30)]
    balanced = balance_classes(items, 100, seed=0)
    assert sum(1 for it in balanced if it.primary_class == "A") == 100
    assert sum(1 for it in balanced if it.primary_class == "B") == 30


# --------------------------------------------------------- regenerate_solutions

def test_regeneration_selects_planted_majority(fast_cfg):
    cfg = fast_cfg.with_overrides(K=8)
    entries = [[tagged(5.0)] * 5 + [tagged(9.0)] * 2 + [NO_CODE]]
    out = regenerate_solutions([item(0)], cfg, HintLibrary(), ScriptedGateway(entries))
    assert out[0].resolved
    assert out[0].regenerated_answer.value == 5.0
    assert out[0].provenance is Provenance.REGENERATED
    assert out[0].completion == tagged(5.0)


def test_regeneration_64_way_split_larger_cluster_wins(fast_cfg):
    cfg = fast_cfg.with_overrides(K=64)
    entries = [[tagged(3.0)] * 33 + [tagged(4.0)] * 31]
    out = regenerate_solutions([item(0)], cfg, HintLibrary(), ScriptedGateway(entries))
    assert out[0].regenerated_answer.value == 3.0


def test_regeneration_all_errors_leaves_unresolved(fast_cfg):
    cfg = fast_cfg.with_overrides(K=4)
    entries = [[CRASH] * 4]
    out = regenerate_solutions([item(0)], cfg, HintLibrary(), ScriptedGateway(entries))
    assert not out[0].resolved
    assert out[0].regenerated_answer is None


def test_regeneration_falls_back_to_original_completion(fast_cfg):
    cfg = fast_cfg.with_overrides(K=2)
    original = item(0, completion=tagged(7.5), original_answer=7.5)
    entries = [[NO_CODE, NO_CODE]]
    out = regenerate_solutions([original], cfg, HintLibrary(), ScriptedGateway(entries))
    assert out[0].resolved
    assert out[0].provenance is Provenance.ORIGINAL
    assert out[0].regenerated_answer is None


def test_regeneration_gateway_failure_leaves_item_unresolved(fast_cfg):
    out = regenerate_solutions(
        [item(0)], fast_cfg, HintLibrary(), ScriptedGateway([])
    )
    assert not out[0].resolved


def test_regeneration_is_idempotent_with_same_mock(fast_cfg):
    cfg = fast_cfg.with_overrides(K=4)
    entries = [[tagged(2.0)] * 4]
    first = regenerate_solutions([item(0)], cfg, HintLibrary(), ScriptedGateway(entries))
    second = regenerate_solutions(first, cfg, HintLibrary(), ScriptedGateway(entries))
    assert [i.to_dict() for i in first] == [i.to_dict() for i in second]


# ------------------------------------------------------------- filter_unresolved

def test_filter_splits_resolved_and_not():
    resolved = item(0, resolved=True, completion=tagged(1.0))
    unresolved = item(1)
    kept, dropped = filter_unresolved([resolved, unresolved])
    assert kept == [resolved]
    assert dropped == [unresolved]


# ------------------------------------------------------ detect_and_infill_missing

def test_infill_sentinel_leaves_item_untouched(fast_cfg):
    it = item(0, completion=tagged(1.0))
    out = detect_and_infill_missing(it, ScriptedGateway([NO_MISSING_DATA]), fast_cfg)
    assert out == it


def test_infill_replaces_question_and_keeps_original(fast_cfg):
    it = item(
        0,
        completion=tagged(1.0),
    )
    longer = it.question + " The capacity contributions are: [100, 101, 88]."
    out = detect_and_infill_missing(it, ScriptedGateway([longer]), fast_cfg)
    assert out.question == longer
    assert out.original_question == it.question
    assert out.provenance is Provenance.INFILLED_QUESTION


def test_infill_empty_reply_flags_for_review(fast_cfg):
    it = item(0, completion=tagged(1.0))
    out = detect_and_infill_missing(it, ScriptedGateway([""]), fast_cfg)
    assert out.needs_review
    assert out.question == it.question


def test_infill_short_reply_flags_for_review(fast_cfg):
    it = item(0, completion=tagged(1.0))
    out = detect_and_infill_missing(it, ScriptedGateway(["ok"]), fast_cfg)
    assert out.needs_review
    assert out.question == it.question


def test_infill_without_completion_is_skipped(fast_cfg):
    it = item(0)
    out = detect_and_infill_missing(it, ScriptedGateway([]), fast_cfg)
    assert out == it


# ------------------------------------------------------------------ export/load

def test_export_and_round_trip(tmp_path):
    items = [
        item(
            0,
            completion=tagged(5.0),
            resolved=True,
            regenerated_answer=NumericAnswer(status=AnswerStatus.OPTIMAL, value=5.0),
            provenance=Provenance.REGENERATED,
        ),
        item(1, completion=tagged(6.0), resolved=True, original_answer=6.0),
        item(2, resolved=True),  # no completion: excluded with warning
    ]
    path = tmp_path / "sft.jsonl"
    count = export_sft_dataset(items, path)
    assert count == 2
    records = load_sft_dataset(path)
    assert len(records) == 2
    assert set(records[0]) == {"question", "completion", "answer", "class", "provenance"}
    assert records[0]["answer"] == 5.0
    assert records[1]["answer"] == 6.0


def test_training_items_file_round_trip(tmp_path):
    items = [
        item(0, completion=tagged(1.0), resolved=True),
        item(1, original_answer=3.5),
    ]
    path = tmp_path / "items.jsonl"
    dump_training_items(items, path)
    assert load_training_items(path) == items


# ---------------------------------------------------------------------- patches

def test_expert_patches_apply():
    it = item(0)
    patched = apply_expert_patches(
        [it], [{"id": "t0", "before": it.question, "after": "clarified question"}]
    )
    assert patched[0].question == "clarified question"
    assert patched[0].provenance is Provenance.EXPERT_EDITED
    assert patched[0].original_question == it.question


def test_expert_patches_reject_stale_before_text():
    with pytest.raises(ValueError, match="does not match"):
        apply_expert_patches(
            [item(0)], [{"id": "t0", "before": "something else", "after": "x"}]
        )


# ----------------------------------------------------------------- full pipeline

def test_clean_pipeline_counts_and_audit(tmp_path, fast_cfg):
    cfg = fast_cfg.with_overrides(K=4)
    items = [item(i, "A", original_answer=float(i)) for i in range(6)]
    regen_entries = []
    infill_entries = []
    for i in range(6):
        if i < 4:
            # majority answer disagrees with the original label for i < 2
            value = 100.0 if i < 2 else float(i)
            regen_entries.append([tagged(value)] * 3 + [NO_CODE])
        else:
            regen_entries.append([CRASH] * 4)
        infill_entries.append(NO_MISSING_DATA)
    summary = clean_pipeline(
        items,
        cfg,
        HintLibrary(),
        ScriptedGateway(regen_entries),
        tmp_path / "out",
        cap=100,
        infill_gateway=ScriptedGateway(infill_entries[:4]),
    )
    assert summary.input_count == 6
    assert summary.balanced_count == 6
    assert summary.kept_count == 4
    assert summary.dropped_count == 2
    assert summary.relabeled_count == 2
    assert summary.exported_count == 4
    audit = [
        json.loads(l) for l in (tmp_path / "out" / "audit.jsonl").read_text().splitlines()
    ]
    events = {a["event"] for a in audit}
    assert {"balance", "regenerate", "drop_unresolved", "summary"} <= events
    assert len(load_sft_dataset(tmp_path / "out" / "sft.jsonl")) == 4


def test_count_relabeled(fast_cfg):
    items = [
        item(
            0,
            original_answer=5.0,
            resolved=True,
            regenerated_answer=NumericAnswer(status=AnswerStatus.OPTIMAL, value=7.0),
        ),
        item(
            1,
            original_answer=5.0,
            resolved=True,
            regenerated_answer=NumericAnswer(status=AnswerStatus.OPTIMAL, value=5.0),
        ),
    ]
    assert count_relabeled(items, fast_cfg) == 1
