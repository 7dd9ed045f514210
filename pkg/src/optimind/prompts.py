"""Render the chat prompts and parse the classifier's reply.

Templates are plain text data files under ``optimind/templates`` with
``{{name}}`` placeholders; they are substituted literally, so question
text containing braces, quotes, or code fences passes through verbatim.
Golden snapshot tests pin the rendered bytes because downstream models
can be prompt-sensitive.
"""

from __future__ import annotations

import ast
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

from .gateway import ChatMessage, user
from .hints import HintEntry, render_hint_block

log = logging.getLogger(__name__)

_warned_missing_examples: set[tuple[int, int]] = set()

_PLACEHOLDER = re.compile(r"\{\{([a-z_]+)\}\}")
_BRACKETED = re.compile(r"\[[^\[\]]*\]", re.DOTALL)

DEFAULT_FEEDBACK_BUDGET = 32768  # combined stdout+stderr bytes in the prompt


class TemplateName(str, Enum):
    CLASSIFICATION = "classification"
    FIRST_TURN_PLAIN = "first_turn_plain"
    FIRST_TURN_HINTED = "first_turn_hinted"
    FEEDBACK = "feedback"


@lru_cache(maxsize=None)
def load_template(name: TemplateName | str) -> str:
    """Template body with a single trailing newline stripped."""
    stem = name.value if isinstance(name, TemplateName) else name
    text = resources.files("optimind.templates").joinpath(f"{stem}.txt").read_text("utf-8")
    return text[:-1] if text.endswith("\n") else text


def render_template(body: str, bindings: Mapping[str, str]) -> str:
    """Substitute every placeholder; unbound placeholders are an error."""
    wanted = set(_PLACEHOLDER.findall(body))
    missing = wanted - set(bindings)
    if missing:
        raise KeyError(f"unbound template placeholders: {sorted(missing)}")
    out = body
    for key in wanted:
        out = out.replace("{{" + key + "}}", bindings[key])
    return out


def build_classification_prompt(
    question: str,
    taxonomy: Sequence[str],
    examples: Mapping[str, str],
) -> list[ChatMessage]:
    """Single user message listing all categories plus per-category examples."""
    if not taxonomy:
        raise ValueError("taxonomy must be non-empty")
    categories = "\n".join(taxonomy)
    seen: set[str] = set()
    example_blocks: list[str] = []
    missing = 0
    for name in taxonomy:
        if name in seen:
            continue
        seen.add(name)
        if name in examples:
            example_blocks.append(f"{name}: {examples[name]}")
        else:
            missing += 1
    if missing and (len(taxonomy), missing) not in _warned_missing_examples:
        _warned_missing_examples.add((len(taxonomy), missing))
        log.warning("%d categories have no example; they are listed name-only", missing)
    body = render_template(
        load_template(TemplateName.CLASSIFICATION),
        {
            "categories": categories,
            "category_examples": "\n\n".join(example_blocks),
            "question": question,
        },
    )
    return [user(body)]


@dataclass(frozen=True)
class ParsedClasses:
    names: tuple[str, ...]
    free_label: bool = False


def parse_class_list(reply: str) -> ParsedClasses:
    """Class names from the first bracketed quoted-string list in the reply.

    Falls back to treating the whole trimmed reply as one free label when
    no bracketed list is found, so a chatty classifier still produces a
    usable (if hint-less) result.
    """
    if not reply.strip():
        raise ValueError("empty classification reply")
    for match in _BRACKETED.finditer(reply):
        names = _parse_bracket(match.group(0))
        if names is not None:
            return ParsedClasses(names=tuple(names), free_label=False)
    return ParsedClasses(names=(reply.strip(),), free_label=True)


def _parse_bracket(text: str) -> list[str] | None:
    try:
        value = ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return _parse_bracket_loose(text)
    if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
        return [v.strip() for v in value]
    return None


def _parse_bracket_loose(text: str) -> list[str] | None:
    # tolerate replies like [ 'A', "B", ] that literal_eval rejects
    inner = text.strip()[1:-1].strip()
    if not inner:
        return []
    items = []
    for part in inner.split(","):
        part = part.strip()
        if not part:
            continue
        if len(part) >= 2 and part[0] == part[-1] and part[0] in "'\"":
            items.append(part[1:-1].strip())
        else:
            return None
    return items or None


def build_first_turn_prompt(
    question: str, hints: Sequence[HintEntry] | None = None
) -> list[ChatMessage]:
    """Plain first-turn prompt, or the hinted variant when hints are given."""
    if not hints:
        body = render_template(load_template(TemplateName.FIRST_TURN_PLAIN), {"question": question})
    else:
        body = render_template(
            load_template(TemplateName.FIRST_TURN_HINTED),
            {"question": question, "hint_block": render_hint_block(hints)},
        )
    return [user(body)]


def build_feedback_prompt(
    stdout: str, stderr: str, *, budget_bytes: int = DEFAULT_FEEDBACK_BUDGET
) -> list[ChatMessage]:
    """Self-correction prompt carrying the previous run's captured streams."""
    fit_stdout, fit_stderr = truncate_streams(stdout, stderr, budget_bytes)
    body = render_template(
        load_template(TemplateName.FEEDBACK), {"stdout": fit_stdout, "stderr": fit_stderr}
    )
    return [user(body)]


def build_infill_prompt(question: str, completion: str) -> list[ChatMessage]:
    """Missing-data repair prompt pairing a question with its solution."""
    body = render_template(
        load_template("infill"), {"question": question, "completion": completion}
    )
    return [user(body)]


def truncate_streams(stdout: str, stderr: str, budget_bytes: int) -> tuple[str, str]:
    """Fit both streams into a combined byte budget.

    stderr is allocated first (it is short and decisive: tracebacks), up
    to a quarter of the budget; stdout takes the rest. Oversized streams
    keep their head and tail in a 3:1 ratio around an elision marker,
    since solver logs bury the verdict at the ends.
    """
    if budget_bytes < 256:
        raise ValueError("budget too small to be useful")
    stderr_alloc = min(len(stderr.encode("utf-8")), budget_bytes // 4)
    stdout_alloc = budget_bytes - stderr_alloc
    return (
        _truncate_middle(stdout, stdout_alloc),
        _truncate_middle(stderr, stderr_alloc if stderr else 0),
    )


def _truncate_middle(text: str, alloc_bytes: int) -> str:
    raw = text.encode("utf-8")
    if len(raw) <= alloc_bytes:
        return text
    marker = f"\n... [{len(raw) - alloc_bytes} bytes truncated] ...\n".encode("utf-8")
    usable = max(alloc_bytes - len(marker), 16)
    head = (usable * 3) // 4
    tail = usable - head
    head_part = raw[:head].decode("utf-8", errors="ignore")
    tail_part = raw[-tail:].decode("utf-8", errors="ignore")
    return head_part + marker.decode("utf-8") + tail_part
