"""Tolerance-based answer equality, clustering, majority vote, correctness.

Numeric equality uses the combined rule |a-b| <= max(rel*max(|a|,|b|), abs).
It is symmetric and reflexive but NOT transitive, so clustering is
order-dependent by design: samples are scanned in arrival order and each
joins the first cluster whose representative it matches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .model import AnswerStatus, NumericAnswer

# statuses that form their own clusters; error/missing never cluster
_STATUS_KEYS = (AnswerStatus.INFEASIBLE, AnswerStatus.UNBOUNDED)


@dataclass(frozen=True)
class AnswerCluster:
    """A group of tolerance-equal answers, keyed by its first member."""

    representative_index: int
    member_indices: tuple[int, ...]
    value: float | None  # objective of the representative; None for status clusters
    status_key: str | None = None  # set for infeasible/unbounded clusters

    @property
    def size(self) -> int:
        return len(self.member_indices)

    @property
    def is_numeric(self) -> bool:
        return self.value is not None


def answers_equal(
    a: float,
    b: float,
    rel: float,
    abs_tol: float,
    *,
    strict_and: bool = False,
) -> bool:
    """True when a and b agree within tolerance.

    Default rule: |a-b| <= max(rel*max(|a|,|b|), abs_tol). With
    ``strict_and`` both the relative and the absolute bound must hold
    individually (config switch; meaningless near zero, hence not default).
    """
    if rel <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be > 0")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"answers_equal requires finite inputs, got {a!r}, {b!r}")
    diff = abs(a - b)
    scale = max(abs(a), abs(b))
    if strict_and:
        return diff <= rel * scale and diff <= abs_tol
    return diff <= max(rel * scale, abs_tol)


def group_answers(
    samples: Sequence[NumericAnswer],
    rel: float,
    abs_tol: float,
    *,
    strict_and: bool = False,
) -> list[AnswerCluster]:
    """Greedy single-pass clustering in sample order.

    Optimal answers join the first cluster whose representative is
    tolerance-equal, else found a new one. Infeasible/unbounded answers
    cluster by status. Error/missing samples are excluded entirely.
    """
    reps: list[dict] = []  # mutable builders, finalized below
    for idx, answer in enumerate(samples):
        if answer.status is AnswerStatus.OPTIMAL:
            assert answer.value is not None
            placed = False
            for rep in reps:
                if rep["value"] is not None and answers_equal(
                    answer.value, rep["value"], rel, abs_tol, strict_and=strict_and
                ):
                    rep["members"].append(idx)
                    placed = True
                    break
            if not placed:
                reps.append({"rep": idx, "members": [idx], "value": answer.value, "key": None})
        elif answer.status in _STATUS_KEYS:
            key = answer.status.value
            for rep in reps:
                if rep["key"] == key:
                    rep["members"].append(idx)
                    break
            else:
                reps.append({"rep": idx, "members": [idx], "value": None, "key": key})
    return [
        AnswerCluster(
            representative_index=rep["rep"],
            member_indices=tuple(rep["members"]),
            value=rep["value"],
            status_key=rep["key"],
        )
        for rep in reps
    ]


def majority_index(clusters: Sequence[AnswerCluster]) -> int | None:
    """Representative index of the winning cluster, or None when empty.

    Largest cluster wins; among equal sizes numeric clusters beat status
    clusters, then the earliest representative index wins.
    """
    if not clusters:
        return None
    best = max(clusters, key=lambda c: (c.size, c.is_numeric, -c.representative_index))
    return best.representative_index


def is_correct(
    answer: NumericAnswer,
    truths: Sequence[float],
    rel: float,
    abs_tol: float,
    *,
    strict_and: bool = False,
) -> bool:
    """True when an optimal answer matches any accepted ground truth."""
    if not truths:
        raise ValueError("truths must be non-empty")
    if answer.status is not AnswerStatus.OPTIMAL:
        return False
    assert answer.value is not None
    return any(
        answers_equal(answer.value, t, rel, abs_tol, strict_and=strict_and) for t in truths
    )
