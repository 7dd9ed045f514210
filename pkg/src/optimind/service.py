"""HTTP API for expert triage: review mismatches, record verdicts, author hints.

The service reads a finished run directory (never writes it), persists
verdicts and defect stubs in its own state directory, and is the single
writer of the hint file while serving. Static files for the browser UI
are mounted when a build directory is supplied.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml
from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel

from .hints import ClassCanonicalizer, HintEntry, add_entry, load_hints, now_iso
from .judge import is_correct
from .model import RunConfig, load_benchmark
from .orchestrator import InstanceTrace, read_traces

VERDICTS = ("undecided", "model_error", "data_error")
AUTH_ENV = "OPTIMIND_API_TOKEN"


def hint_id(class_name: str, entry: HintEntry) -> str:
    blob = f"{class_name}\x00{entry.error_summary}\x00{entry.hint}".encode("utf-8")
    return hashlib.sha1(blob).hexdigest()[:12]


@dataclass
class MismatchCase:
    instance_id: str
    problem_class: str
    question: str
    model_completion: str
    model_answer: dict[str, Any]
    reference_answer: float
    verdict: str = "undecided"
    note: str = ""
    linked_hint_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance_id": self.instance_id,
            "class": self.problem_class,
            "question": self.question,
            "model_completion": self.model_completion,
            "model_answer": self.model_answer,
            "reference_answer": self.reference_answer,
            "verdict": self.verdict,
            "note": self.note,
            "linked_hint_ids": list(self.linked_hint_ids),
        }


class TriageStore:
    """Mismatch cases derived from a run directory plus service-owned state."""

    def __init__(self, traces_dir: str | Path, hints_path: str | Path, state_dir: str | Path):
        self.traces_dir = Path(traces_dir)
        self.hints_path = Path(hints_path)
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.verdict_path = self.state_dir / "verdicts.json"
        self.stub_path = self.state_dir / "defect_stubs.jsonl"
        self.lock = threading.Lock()
        self.canon = ClassCanonicalizer()
        self.hints = load_hints(self.hints_path)
        self.cases = self._discover_cases()
        self._apply_saved_verdicts()

    def _discover_cases(self) -> dict[str, MismatchCase]:
        cfg = RunConfig.from_dict(
            yaml.safe_load((self.traces_dir / "config.yaml").read_text(encoding="utf-8"))
        )
        bench = {b.id: b for b in load_benchmark(self.traces_dir / "benchmark.jsonl")}
        traces = read_traces(self.traces_dir / "seed_0.jsonl")
        cases: dict[str, MismatchCase] = {}
        # newest first: later trace rows are assumed more recent
        for trace in reversed(traces):
            instance = bench.get(trace.instance_id)
            if instance is None or not instance.ground_truths:
                continue
            if is_correct(
                trace.final_answer,
                instance.ground_truths,
                cfg.tolerance_rel,
                cfg.tolerance_abs,
            ):
                continue
            cases[trace.instance_id] = MismatchCase(
                instance_id=trace.instance_id,
                problem_class=trace.predicted_classes[0]
                if trace.predicted_classes
                else "unclassified",
                question=instance.question,
                model_completion=_majority_completion(trace),
                model_answer=trace.final_answer.to_dict(),
                reference_answer=instance.ground_truths[0],
            )
        return cases

    def _apply_saved_verdicts(self) -> None:
        if not self.verdict_path.exists():
            return
        saved = json.loads(self.verdict_path.read_text(encoding="utf-8"))
        for case_id, record in saved.items():
            case = self.cases.get(case_id)
            if case is not None:
                case.verdict = record.get("verdict", "undecided")
                case.note = record.get("note", "")
                case.linked_hint_ids = list(record.get("linked_hint_ids", []))

    def _save_verdicts(self) -> None:
        payload = {
            cid: {
                "verdict": c.verdict,
                "note": c.note,
                "linked_hint_ids": c.linked_hint_ids,
            }
            for cid, c in self.cases.items()
            if c.verdict != "undecided" or c.linked_hint_ids
        }
        tmp = self.verdict_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        os.replace(tmp, self.verdict_path)

    def list_cases(
        self, class_filter: str | None, verdict_filter: str | None
    ) -> list[MismatchCase]:
        cases = list(self.cases.values())
        if class_filter:
            wanted = self.canon.resolve(class_filter) or class_filter
            cases = [
                c
                for c in cases
                if (self.canon.resolve(c.problem_class) or c.problem_class) == wanted
            ]
        if verdict_filter:
            if verdict_filter not in VERDICTS:
                raise HTTPException(status_code=400, detail=f"invalid verdict {verdict_filter!r}")
            cases = [c for c in cases if c.verdict == verdict_filter]
        return cases

    def submit_verdict(self, case_id: str, verdict: str, note: str, category: str) -> MismatchCase:
        with self.lock:
            case = self.cases.get(case_id)
            if case is None:
                raise HTTPException(status_code=404, detail=f"unknown case {case_id!r}")
            if verdict not in ("model_error", "data_error"):
                raise HTTPException(status_code=400, detail=f"invalid verdict {verdict!r}")
            if case.verdict != "undecided":
                raise HTTPException(
                    status_code=409, detail=f"verdict already set to {case.verdict!r}"
                )
            case.verdict = verdict
            case.note = note
            self._save_verdicts()
            if verdict == "data_error":
                with open(self.stub_path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {
                                "instance_id": case.instance_id,
                                "suggested_category": category,
                                "note": note,
                                "created_at": now_iso(),
                            }
                        )
                        + "\n"
                    )
            return case

    def author_hint(
        self, case_id: str, error_summary: str, hint: str, author: str
    ) -> tuple[str, HintEntry, str]:
        with self.lock:
            case = self.cases.get(case_id)
            if case is None:
                raise HTTPException(status_code=404, detail=f"unknown case {case_id!r}")
            if case.verdict != "model_error":
                raise HTTPException(
                    status_code=409, detail="hints require a model_error verdict"
                )
            try:
                entry = HintEntry(
                    error_summary=error_summary,
                    hint=hint,
                    author=author,
                    created_at=now_iso(),
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            class_name = self.canon.resolve(case.problem_class) or case.problem_class
            existing = {e.key for e in self.hints.classes.get(class_name, [])}
            created = entry.key not in existing
            add_entry(self.hints, class_name, entry)
            hid = hint_id(class_name, entry)
            if hid not in case.linked_hint_ids:
                case.linked_hint_ids.append(hid)
                self._save_verdicts()
            return hid, entry, "created" if created else "duplicate"


def _majority_completion(trace: InstanceTrace) -> str:
    for turn in reversed(trace.turns):
        if turn.majority is not None:
            return turn.samples[turn.majority].completion_text
        if turn.samples:
            return turn.samples[0].completion_text
    return ""


class VerdictBody(BaseModel):
    verdict: str
    note: str = ""
    category: str = "wrong_solution"


class HintBody(BaseModel):
    case_id: str
    error_summary: str
    hint: str
    author: str = ""


def create_app(
    traces_dir: str | Path,
    hints_path: str | Path,
    *,
    state_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    store = TriageStore(
        traces_dir, hints_path, state_dir or Path(hints_path).parent / "triage_state"
    )
    app = FastAPI(title="optimind curation service")
    app.state.store = store

    def check_auth(request: Request) -> None:
        token = os.environ.get(AUTH_ENV, "")
        if not token:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    @app.get("/api/mismatches")
    def list_mismatches(
        _: None = Depends(check_auth),
        class_name: str | None = Query(default=None, alias="class"),
        verdict: str | None = None,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=20, ge=1, le=200),
    ) -> dict[str, Any]:
        cases = store.list_cases(class_name, verdict)
        total = len(cases)
        page_count = max(1, -(-total // page_size))
        start = (page - 1) * page_size
        return {
            "cases": [c.to_dict() for c in cases[start : start + page_size]],
            "page": page,
            "page_count": page_count,
            "total": total,
        }

    @app.get("/api/mismatches/{case_id}")
    def get_mismatch(case_id: str, _: None = Depends(check_auth)) -> dict[str, Any]:
        case = store.cases.get(case_id)
        if case is None:
            raise HTTPException(status_code=404, detail=f"unknown case {case_id!r}")
        return case.to_dict()

    @app.post("/api/mismatches/{case_id}/verdict")
    def post_verdict(
        case_id: str, body: VerdictBody, _: None = Depends(check_auth)
    ) -> dict[str, Any]:
        case = store.submit_verdict(case_id, body.verdict, body.note, body.category)
        return case.to_dict()

    @app.get("/api/hints")
    def get_hints(_: None = Depends(check_auth)) -> dict[str, Any]:
        return {
            "classes": {
                name: [dict(e.to_dict(), id=hint_id(name, e)) for e in entries]
                for name, entries in store.hints.classes.items()
            }
        }

    @app.post("/api/hints")
    def post_hint(body: HintBody, _: None = Depends(check_auth)) -> dict[str, Any]:
        hid, entry, status = store.author_hint(
            body.case_id, body.error_summary, body.hint, body.author
        )
        return {"id": hid, "status": status, "entry": entry.to_dict()}

    @app.get("/api/classes")
    def get_classes(_: None = Depends(check_auth)) -> dict[str, Any]:
        present = sorted({c.problem_class for c in store.cases.values()})
        return {"taxonomy": store.canon.taxonomy, "present": present}

    if ui_dir is not None and Path(ui_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
