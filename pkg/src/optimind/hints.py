"""Per-problem-class library of (error summary, preventive hint) pairs.

The library lives in one human-editable YAML file keyed by class name;
experts author entries by hand or through the curation service. Class
names are canonicalized (case-insensitive, whitespace-collapsed, alias
table) against the seed taxonomy so that free-text classifier output
still finds its hints. Unknown classes simply yield no entries.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import yaml

_WS = re.compile(r"\s+")


def _normalize(name: str) -> str:
    return _WS.sub(" ", name.strip()).lower()


def now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class HintEntry:
    error_summary: str
    hint: str
    author: str = ""
    created_at: str = ""

    def __post_init__(self) -> None:
        if not self.error_summary.strip():
            raise ValueError("error_summary must be non-empty")
        if not self.hint.strip():
            raise ValueError("hint must be non-empty")

    @property
    def key(self) -> tuple[str, str]:
        return (self.error_summary, self.hint)

    def to_dict(self) -> dict[str, str]:
        return {
            "error": self.error_summary,
            "hint": self.hint,
            "author": self.author,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HintEntry":
        return cls(
            error_summary=str(data["error"]),
            hint=str(data["hint"]),
            author=str(data.get("author", "")),
            created_at=str(data.get("created_at", "")),
        )


@dataclass
class HintLibrary:
    """Ordered map from class name to its ordered hint entries."""

    classes: dict[str, list[HintEntry]] = field(default_factory=dict)
    path: Path | None = None

    def entry_count(self) -> int:
        return sum(len(v) for v in self.classes.values())


def load_taxonomy(path: str | Path | None = None) -> list[str]:
    """Seed class names, one per line, in file order (duplicates kept)."""
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("optimind.templates").joinpath("taxonomy.txt").read_text("utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def load_aliases(path: str | Path | None = None) -> dict[str, str]:
    """Alias -> canonical class name map (e.g. TSP -> TravelingSalesman)."""
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
    else:
        text = resources.files("optimind.templates").joinpath("class_aliases.yaml").read_text(
            "utf-8"
        )
    data = yaml.safe_load(text) or {}
    return {str(k): str(v) for k, v in data.items()}


class ClassCanonicalizer:
    """Resolves free-text class names against the taxonomy."""

    def __init__(
        self, taxonomy: Sequence[str] | None = None, aliases: dict[str, str] | None = None
    ):
        self.taxonomy = list(taxonomy) if taxonomy is not None else load_taxonomy()
        self.aliases = dict(aliases) if aliases is not None else load_aliases()
        self._index: dict[str, str] = {}
        for name in self.taxonomy:
            self._index.setdefault(_normalize(name), name)
        for alias, target in self.aliases.items():
            self._index.setdefault(_normalize(alias), target)

    def resolve(self, name: str) -> str | None:
        """Canonical taxonomy name, or None for a free label."""
        return self._index.get(_normalize(name))


def load_hints(path: str | Path) -> HintLibrary:
    """Load the YAML hint file; a missing file is an empty library."""
    path = Path(path)
    if not path.exists():
        return HintLibrary(path=path)
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    raw_classes = data.get("classes", {}) or {}
    classes: dict[str, list[HintEntry]] = {}
    for name, entries in raw_classes.items():
        classes[str(name)] = [HintEntry.from_dict(e) for e in (entries or [])]
    return HintLibrary(classes=classes, path=path)


def save_hints(lib: HintLibrary, path: str | Path | None = None) -> None:
    """Atomic replace so readers never observe a half-written file."""
    target = Path(path) if path is not None else lib.path
    if target is None:
        raise ValueError("hint library has no path to save to")
    payload = {
        "classes": {name: [e.to_dict() for e in entries] for name, entries in lib.classes.items()}
    }
    text = yaml.safe_dump(payload, sort_keys=False, allow_unicode=True, width=100000)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=".hints_", suffix=".yaml")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def add_entry(
    lib: HintLibrary,
    class_name: str,
    entry: HintEntry,
    *,
    persist: bool = True,
) -> HintLibrary:
    """Append an entry under a class; idempotent on (class, error, hint)."""
    entries = lib.classes.setdefault(class_name, [])
    if all(e.key != entry.key for e in entries):
        entries.append(entry)
    if persist and lib.path is not None:
        save_hints(lib)
    return lib


def lookup(
    lib: HintLibrary,
    class_names: Iterable[str],
    canonicalizer: ClassCanonicalizer | None = None,
) -> list[HintEntry]:
    """Entries for the named classes, query order, de-duplicated.

    Library keys and query names are both canonicalized, so a library
    stored under "TSP" answers a query for "TravelingSalesman". Unknown
    classes contribute nothing.
    """
    canon = canonicalizer or ClassCanonicalizer()
    by_key: dict[str, list[HintEntry]] = {}
    for lib_name, entries in lib.classes.items():
        key = canon.resolve(lib_name) or _normalize(lib_name)
        by_key.setdefault(key, []).extend(entries)
    result: list[HintEntry] = []
    seen: set[tuple[str, str]] = set()
    for name in class_names:
        key = canon.resolve(name) or _normalize(name)
        for entry in by_key.get(key, []):
            if entry.key not in seen:
                seen.add(entry.key)
                result.append(entry)
    return result


def render_hint_block(entries: Sequence[HintEntry]) -> str:
    """The numbered hint region of the hinted first-turn prompt."""
    if not entries:
        raise ValueError("render_hint_block requires at least one entry")
    lines = [
        f"Error analysis #{i}: {e.error_summary}, {e.hint}" for i, e in enumerate(entries, 1)
    ]
    return "\n\n".join(lines)
