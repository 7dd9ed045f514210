"""Batch evaluation: run a benchmark, judge stored traces, aggregate seeds.

Judging is a pure post-pass over trace files; re-scoring a saved run with
different tolerances never requires re-running models. A run directory is
self-contained: the benchmark snapshot, the config snapshot, and one
trace file per seed.
"""

from __future__ import annotations

import json
import logging
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from .gateway import Gateway
from .hints import ClassCanonicalizer, HintLibrary
from .judge import is_correct
from .model import (
    BenchmarkError,
    ProblemInstance,
    RunConfig,
    dump_benchmark,
    load_benchmark,
    validate_instance,
)
from .orchestrator import InstanceTrace, read_traces, run_instance, write_traces

log = logging.getLogger(__name__)

OTHER_CLASS = "other"
UNCLASSIFIED = "unclassified"


@dataclass
class InstanceRow:
    instance_id: str
    problem_class: str
    correct_at_turn: list[bool]
    final_correct: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "class": self.problem_class,
            "correct_at_turn": list(self.correct_at_turn),
            "final_correct": self.final_correct,
        }


@dataclass
class SeedResult:
    seed_index: int
    rows: list[InstanceRow]
    accuracy_at_turn: list[float]
    per_class_accuracy: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed_index": self.seed_index,
            "rows": [r.to_dict() for r in self.rows],
            "accuracy_at_turn": list(self.accuracy_at_turn),
            "per_class_accuracy": dict(self.per_class_accuracy),
        }


@dataclass
class SeedAggregate:
    """Elementwise mean and sample std-dev (n-1) across seeds."""

    mean: Any
    std: Any
    n: int
    degenerate: bool = False  # single seed: std reported as 0 with this flag

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean, "std": self.std, "n": self.n, "degenerate": self.degenerate}


@dataclass
class RunReport:
    config: dict[str, Any]
    seeds: list[SeedResult]
    accuracy_at_turn: list[float]
    per_class_accuracy: dict[str, float]
    seed_stats: SeedAggregate | None
    excluded_count: int = 0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "seeds": [s.to_dict() for s in self.seeds],
            "accuracy_at_turn": list(self.accuracy_at_turn),
            "per_class_accuracy": dict(self.per_class_accuracy),
            "seed_stats": self.seed_stats.to_dict() if self.seed_stats else None,
            "excluded_count": self.excluded_count,
            "flags": list(self.flags),
        }


def aggregate_seeds(values: Sequence[Any]) -> SeedAggregate:
    """Mean +- sample std of per-seed scalars, or elementwise for vectors."""
    if not values:
        raise ValueError("aggregate_seeds requires at least one value")
    first = values[0]
    if isinstance(first, (int, float)):
        series = [float(v) for v in values]
        if len(series) == 1:
            return SeedAggregate(mean=series[0], std=0.0, n=1, degenerate=True)
        return SeedAggregate(
            mean=statistics.fmean(series), std=statistics.stdev(series), n=len(series)
        )
    lengths = {len(v) for v in values}
    if len(lengths) != 1:
        raise ValueError(f"mismatched shapes across seeds: lengths {sorted(lengths)}")
    columns = list(zip(*values))
    if len(values) == 1:
        return SeedAggregate(
            mean=[float(c[0]) for c in columns],
            std=[0.0 for _ in columns],
            n=1,
            degenerate=True,
        )
    return SeedAggregate(
        mean=[statistics.fmean(c) for c in columns],
        std=[statistics.stdev(c) for c in columns],
        n=len(values),
    )


def per_class_breakdown(
    rows: Sequence[InstanceRow],
    *,
    floor_pct: float = 2.5,
    turn: int | None = None,
) -> dict[str, float]:
    """Accuracy per predicted class; rare classes fold into ``other``.

    ``turn`` selects which round to score; None means final correctness.
    """
    if not rows:
        return {}
    total = len(rows)
    counts = Counter((row.problem_class or UNCLASSIFIED) for row in rows)
    folded: dict[str, list[bool]] = {}
    for row in rows:
        name = row.problem_class or UNCLASSIFIED
        if 100.0 * counts[name] / total < floor_pct:
            name = OTHER_CLASS
        value = row.final_correct if turn is None else row.correct_at_turn[turn]
        folded.setdefault(name, []).append(value)
    return {
        name: 100.0 * sum(vals) / len(vals) for name, vals in sorted(folded.items())
    }


def score_traces(
    traces: Sequence[InstanceTrace],
    bench_by_id: Mapping[str, ProblemInstance],
    cfg: RunConfig,
    seed_index: int = 0,
) -> SeedResult:
    """Judge one seed's traces against ground truth, per turn."""
    rows: list[InstanceRow] = []
    for trace in traces:
        instance = bench_by_id[trace.instance_id]
        correct = [
            is_correct(
                turn.majority_answer(),
                instance.ground_truths,
                cfg.tolerance_rel,
                cfg.tolerance_abs,
                strict_and=cfg.strict_tolerance_and,
            )
            for turn in trace.turns
        ]
        rows.append(
            InstanceRow(
                instance_id=trace.instance_id,
                problem_class=trace.predicted_classes[0]
                if trace.predicted_classes
                else UNCLASSIFIED,
                correct_at_turn=correct,
                final_correct=correct[-1] if correct else False,
            )
        )
    accuracy = []
    if rows:
        turn_count = max(len(r.correct_at_turn) for r in rows)
        for m in range(turn_count):
            hits = sum(1 for r in rows if m < len(r.correct_at_turn) and r.correct_at_turn[m])
            accuracy.append(100.0 * hits / len(rows))
    return SeedResult(
        seed_index=seed_index,
        rows=rows,
        accuracy_at_turn=accuracy,
        per_class_accuracy=per_class_breakdown(rows, floor_pct=cfg.class_floor_pct),
    )


def evaluable_instances(
    bench: Sequence[ProblemInstance],
) -> tuple[list[ProblemInstance], int]:
    """Split out instances excluded from evaluation (out_of_scope)."""
    kept: list[ProblemInstance] = []
    excluded = 0
    for instance in bench:
        findings = validate_instance(instance)
        if instance.out_of_scope:
            excluded += 1
            continue
        if findings:
            raise BenchmarkError(f"instance {instance.id!r} not evaluable: {findings}")
        kept.append(instance)
    return kept, excluded


def run_benchmark(
    bench: Sequence[ProblemInstance],
    cfg: RunConfig,
    lib: HintLibrary,
    gateway: Gateway | Callable[[int], Gateway],
    out_dir: str | Path,
    *,
    canonicalizer: ClassCanonicalizer | None = None,
    examples: Mapping[str, str] | None = None,
) -> RunReport:
    """Run every evaluable instance seed_count times, then score the traces.

    ``gateway`` may be a factory taking the seed index, so stateful mocks
    get a fresh script per seed. Traces, the benchmark snapshot, and the
    config snapshot land in ``out_dir``; scoring reads them back, keeping
    evaluation a pure function of the stored run.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kept, _ = evaluable_instances(bench)
    canon = canonicalizer or ClassCanonicalizer()

    dump_benchmark(bench, out_dir / "benchmark.jsonl")
    (out_dir / "config.yaml").write_text(
        yaml.safe_dump(cfg.to_dict(), sort_keys=False), encoding="utf-8"
    )
    for seed in range(cfg.seed_count):
        seed_gateway = gateway(seed) if not hasattr(gateway, "complete") else gateway

        def run_one(instance: ProblemInstance):
            return run_instance(
                instance, cfg, lib, seed_gateway, canonicalizer=canon, examples=examples
            )

        if cfg.instance_workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=cfg.instance_workers) as pool:
                traces = list(pool.map(run_one, kept))  # trace order == bench order
        else:
            traces = [run_one(instance) for instance in kept]
        write_traces(traces, out_dir / f"seed_{seed}.jsonl")
        log.info("seed %d: %d traces written", seed, len(traces))
    return score_run(out_dir)


def score_run(run_dir: str | Path) -> RunReport:
    """Rebuild the report from a stored run directory, bit-for-bit."""
    run_dir = Path(run_dir)
    cfg = RunConfig.from_dict(
        yaml.safe_load((run_dir / "config.yaml").read_text(encoding="utf-8"))
    )
    bench = load_benchmark(run_dir / "benchmark.jsonl")
    bench_by_id = {b.id: b for b in bench}
    excluded = sum(1 for b in bench if b.out_of_scope)

    seeds: list[SeedResult] = []
    for seed in range(cfg.seed_count):
        path = run_dir / f"seed_{seed}.jsonl"
        if not path.exists():
            break
        seeds.append(score_traces(read_traces(path), bench_by_id, cfg, seed_index=seed))
    if not seeds:
        raise FileNotFoundError(f"no seed trace files under {run_dir}")

    flags: list[str] = []
    if all(not s.rows for s in seeds):
        flags.append("no evaluable instances")
        return RunReport(
            config=cfg.to_dict(),
            seeds=seeds,
            accuracy_at_turn=[],
            per_class_accuracy={},
            seed_stats=None,
            excluded_count=excluded,
            flags=flags,
        )
    stats = aggregate_seeds([s.accuracy_at_turn for s in seeds])
    if stats.degenerate:
        flags.append("single seed: std undefined, reported as 0")
    class_names = sorted({name for s in seeds for name in s.per_class_accuracy})
    per_class = {
        name: statistics.fmean(
            [s.per_class_accuracy[name] for s in seeds if name in s.per_class_accuracy]
        )
        for name in class_names
    }
    return RunReport(
        config=cfg.to_dict(),
        seeds=seeds,
        accuracy_at_turn=list(stats.mean),
        per_class_accuracy=per_class,
        seed_stats=stats,
        excluded_count=excluded,
        flags=flags,
    )


def write_report_json(report: RunReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8"
    )


def write_report_csv(report: RunReport, path: str | Path) -> None:
    """Human table: accuracy per turn as mean +- std to 2 decimals."""
    import csv

    stats = report.seed_stats
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["turn", "accuracy_mean", "accuracy_std", "formatted"])
        for m, acc in enumerate(report.accuracy_at_turn):
            std = stats.std[m] if stats else 0.0
            writer.writerow(
                [m + 1, f"{acc:.2f}", f"{std:.2f}", f"{acc:.2f} ± {std:.2f}"]
            )
        writer.writerow([])
        writer.writerow(["class", "accuracy"])
        for name, acc in report.per_class_accuracy.items():
            writer.writerow([name, f"{acc:.2f}"])
