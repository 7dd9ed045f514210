"""Chat-completion clients: one real HTTP gateway, several deterministic mocks.

All model traffic in the system goes through a Gateway. The HTTP gateway
speaks the OpenAI-compatible chat-completions schema so one client covers
vLLM, SGLang, and hosted endpoints alike. The mocks make every test and
the whole acceptance suite runnable without a model: the replay gateway
keys canned completions by a request digest, the scripted gateways hand
out a pre-planned sequence of replies.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if self.role in (Role.USER, Role.ASSISTANT) and not self.content:
            raise ValueError(f"{self.role.value} message content must be non-empty")

    def to_dict(self) -> dict[str, str]:
        return {"role": self.role.value, "content": self.content}


def user(content: str) -> ChatMessage:
    return ChatMessage(role=Role.USER, content=content)


def assistant(content: str) -> ChatMessage:
    return ChatMessage(role=Role.ASSISTANT, content=content)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.6
    top_p: float = 0.95
    max_tokens: int = 60000
    n: int = 1

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1 or self.n < 1:
            raise ValueError("max_tokens and n must be >= 1")


class GatewayError(Exception):
    """Base for all gateway failures."""


class TransportError(GatewayError):
    """Network/server trouble; retried with backoff before surfacing."""


class AuthError(GatewayError):
    """Endpoint rejected our credentials; not retryable."""


class ContextOverflowError(GatewayError):
    """Request exceeds the endpoint's context window; fatal per instance."""


class MalformedResponseError(GatewayError):
    """Endpoint replied with something that is not a chat completion."""


class Gateway(Protocol):
    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        """Return the completion texts for one request (normally exactly n)."""
        ...


def request_digest(model: str, messages: Sequence[ChatMessage], n: int) -> str:
    """Stable key for replay fixtures; sampling knobs intentionally excluded."""
    payload = {
        "model": model,
        "messages": [m.to_dict() for m in messages],
        "n": n,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


class HttpGateway:
    """OpenAI-compatible chat-completions client with retries and n-padding.

    Transient transport errors and 5xx/429 responses are retried with
    exponential backoff. Endpoints that cap ``n`` are padded by re-request
    until the full sample count arrives; if padding keeps failing but at
    least one completion was obtained, the partial batch is returned with
    a warning (majority voting tolerates missing samples).
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str = "",
        *,
        max_attempts: int = 4,
        backoff_base: float = 0.25,
        max_concurrency: int = 8,
        timeout: float = 600.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._semaphore = threading.Semaphore(max_concurrency)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        if not messages:
            raise ValueError("messages must be non-empty")
        completions: list[str] = []
        rounds = 0
        while len(completions) < params.n:
            want = params.n - len(completions)
            try:
                batch = self._request_once(messages, params, want)
            except (TransportError, MalformedResponseError):
                if completions:
                    log.warning(
                        "returning %d/%d completions after repeated failures",
                        len(completions),
                        params.n,
                    )
                    return completions
                raise
            completions.extend(batch)
            rounds += 1
            if rounds > params.n:  # endpoint keeps under-filling; avoid spinning
                raise MalformedResponseError("endpoint never returned requested sample count")
        return completions[: params.n]

    def _request_once(
        self, messages: Sequence[ChatMessage], params: SamplingParams, n: int
    ) -> list[str]:
        body = {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "n": n,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.endpoint}/chat/completions"
        last_exc: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                delay = self.backoff_base * (2 ** (attempt - 1))
                log.info("retrying request (attempt %d/%d)", attempt + 1, self.max_attempts)
                time.sleep(delay)
            try:
                with self._semaphore:
                    response = self._client.post(url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_exc = TransportError(f"transport failure: {exc}")
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
            if response.status_code == 400 and _mentions_context_overflow(response.text):
                raise ContextOverflowError(response.text[:500])
            if response.status_code >= 500 or response.status_code == 429:
                last_exc = TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
                continue
            if response.status_code != 200:
                raise MalformedResponseError(
                    f"HTTP {response.status_code}: {response.text[:500]}"
                )
            return _parse_completions(response)
        assert last_exc is not None
        raise last_exc


def _mentions_context_overflow(text: str) -> bool:
    lowered = text.lower()
    return "context" in lowered and ("length" in lowered or "window" in lowered or "token" in lowered)


def _parse_completions(response: httpx.Response) -> list[str]:
    try:
        data = response.json()
        choices = data["choices"]
        out = []
        for choice in choices:
            message = choice["message"]
            content = message.get("content") or ""
            reasoning = message.get("reasoning_content") or ""
            out.append(f"{reasoning}\n\n{content}" if reasoning else content)
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponseError(f"unexpected response shape: {exc}") from exc


class ReplayGateway:
    """Deterministic gateway backed by a digest-keyed fixture file."""

    def __init__(self, model: str = "replay", fixtures: dict[str, list[str]] | None = None):
        self.model = model
        self.fixtures: dict[str, list[str]] = dict(fixtures or {})

    @classmethod
    def load(cls, path: str | Path, model: str = "replay") -> "ReplayGateway":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(model=model, fixtures={k: list(v) for k, v in data.items()})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.fixtures, indent=2, ensure_ascii=False), encoding="utf-8"
        )

    def add(self, messages: Sequence[ChatMessage], n: int, completions: Sequence[str]) -> str:
        digest = request_digest(self.model, messages, n)
        self.fixtures[digest] = list(completions)
        return digest

    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        digest = request_digest(self.model, messages, params.n)
        if digest not in self.fixtures:
            raise TransportError(f"no replay fixture for digest {digest[:12]}…")
        canned = self.fixtures[digest]
        if len(canned) < params.n:
            raise MalformedResponseError(
                f"fixture holds {len(canned)} completions, request wants {params.n}"
            )
        return list(canned[: params.n])


ScriptEntry = Any  # str replicated n times, or a list consumed per sample


class ScriptedGateway:
    """Hands out a pre-planned sequence of replies, one entry per call."""

    def __init__(self, entries: Sequence[ScriptEntry]):
        self.entries = list(entries)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        with self._lock:
            if self.calls >= len(self.entries):
                raise TransportError(f"script exhausted after {self.calls} calls")
            entry = self.entries[self.calls]
            self.calls += 1
        return _expand_entry(entry, params.n)


class RoutedScriptedGateway:
    """Per-key scripted replies, routed by substring match in user messages.

    Keys are typically the instance question texts, so one gateway can
    serve a whole benchmark run deterministically.
    """

    def __init__(self, scripts: dict[str, Sequence[ScriptEntry]]):
        self.scripts = {key: list(entries) for key, entries in scripts.items()}
        self.cursors = {key: 0 for key in self.scripts}
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        haystack = "\n".join(m.content for m in messages if m.role is Role.USER)
        for key in self.scripts:
            if key in haystack:
                with self._lock:
                    cursor = self.cursors[key]
                    entries = self.scripts[key]
                    if cursor >= len(entries):
                        raise TransportError(f"script for key {key[:40]!r} exhausted")
                    self.cursors[key] = cursor + 1
                return _expand_entry(entries[cursor], params.n)
        raise TransportError("no script matches the request")


class RecordingGateway:
    """Wraps another gateway and logs every request for assertions."""

    def __init__(self, inner: Gateway):
        self.inner = inner
        self.requests: list[tuple[list[ChatMessage], SamplingParams]] = []

    def complete(self, messages: Sequence[ChatMessage], params: SamplingParams) -> list[str]:
        self.requests.append((list(messages), params))
        return self.inner.complete(messages, params)


def _expand_entry(entry: ScriptEntry, n: int) -> list[str]:
    if isinstance(entry, str):
        return [entry] * n
    entries = list(entry)
    if len(entries) < n:
        raise MalformedResponseError(f"script entry holds {len(entries)} replies, need {n}")
    return entries[:n]
