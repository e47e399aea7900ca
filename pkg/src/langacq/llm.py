"""Remote chat-model agents over HTTP chat-completion endpoints.

Requests use a provider-neutral shape (system prompt plus alternating
user/assistant messages) that thin mappers translate into each provider's
envelope. API keys are read from the environment at call time and never
stored on the endpoint object or written to transcripts.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

log = logging.getLogger(__name__)

PROMPT_VARIANTS = ("full", "reduced")
PROVIDERS = ("openai", "anthropic", "gemini")


class LLMError(RuntimeError):
    retryable = False


class AuthenticationError(LLMError):
    pass


class RateLimitError(LLMError):
    retryable = True


class TransientError(LLMError):
    retryable = True


class ProviderTimeout(LLMError):
    pass


class MalformedResponseError(LLMError):
    pass


def build_prompt(variant: str = "full") -> str:
    """The system prompt for ``variant``, byte-for-byte as shipped."""
    if variant not in PROMPT_VARIANTS:
        raise ValueError(f"unknown prompt variant {variant!r}")
    return resources.files("langacq.data.prompts").joinpath(f"{variant}.txt").read_text("utf-8")


@dataclass(frozen=True)
class AgentEndpoint:
    label: str
    provider: str
    base_url: str
    model: str
    key_env: str
    prompt_variant: str = "full"
    temperature: float | None = None
    max_tokens: int | None = None
    max_attempts: int = 5
    backoff_ms: int = 500
    timeout_ms: int = 60000
    requests_per_minute: float | None = None

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r}; choose from {PROVIDERS}")
        if self.prompt_variant not in PROMPT_VARIANTS:
            raise ValueError(f"unknown prompt variant {self.prompt_variant!r}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")

    def describe(self) -> dict[str, Any]:
        """Config echo safe for transcripts (names the key variable, never the key)."""
        return asdict(self)


def load_endpoints(path: str | Path) -> dict[str, AgentEndpoint]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = doc["endpoints"] if isinstance(doc, dict) else doc
    return {e["label"]: AgentEndpoint(**e) for e in entries}


# -- provider envelopes -----------------------------------------------------


def chat_messages(system: str, history: Sequence[tuple[str, str]]) -> list[dict[str, str]]:
    """Environment turns become user messages, agent turns assistant messages."""
    msgs = [{"role": "system", "content": system}]
    for role, text in history:
        msgs.append({"role": "user" if role == "environment" else "assistant", "content": text})
    return msgs


@dataclass(frozen=True)
class PreparedRequest:
    url: str
    headers: dict[str, str]
    body: bytes


def _encode(body: dict[str, Any]) -> bytes:
    return json.dumps(body, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def prepare_request(ep: AgentEndpoint, messages: list[dict[str, str]], key: str) -> PreparedRequest:
    base = ep.base_url.rstrip("/")
    system = messages[0]["content"]
    turns = messages[1:]
    headers = {"content-type": "application/json"}
    if ep.provider == "openai":
        body: dict[str, Any] = {"model": ep.model, "messages": messages}
        if ep.temperature is not None:
            body["temperature"] = ep.temperature
        if ep.max_tokens is not None:
            body["max_tokens"] = ep.max_tokens
        headers["authorization"] = f"Bearer {key}"
        return PreparedRequest(f"{base}/chat/completions", headers, _encode(body))
    if ep.provider == "anthropic":
        body = {"model": ep.model, "system": system, "messages": turns, "max_tokens": ep.max_tokens or 256}
        if ep.temperature is not None:
            body["temperature"] = ep.temperature
        headers["x-api-key"] = key
        headers["anthropic-version"] = "2023-06-01"
        return PreparedRequest(f"{base}/messages", headers, _encode(body))
    # gemini
    body = {
        "systemInstruction": {"parts": [{"text": system}]},
        "contents": [
            {"role": "user" if m["role"] == "user" else "model", "parts": [{"text": m["content"]}]}
            for m in turns
        ],
    }
    gen: dict[str, Any] = {}
    if ep.temperature is not None:
        gen["temperature"] = ep.temperature
    if ep.max_tokens is not None:
        gen["maxOutputTokens"] = ep.max_tokens
    if gen:
        body["generationConfig"] = gen
    headers["x-goog-api-key"] = key
    return PreparedRequest(f"{base}/models/{ep.model}:generateContent", headers, _encode(body))


def extract_text(provider: str, payload: Any) -> str:
    try:
        if provider == "openai":
            text = payload["choices"][0]["message"]["content"]
        elif provider == "anthropic":
            text = "".join(b["text"] for b in payload["content"] if b.get("type") == "text")
        else:
            text = "".join(p.get("text", "") for p in payload["candidates"][0]["content"]["parts"])
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected {provider} response shape: {exc!r}") from exc
    if not isinstance(text, str):
        raise MalformedResponseError(f"{provider} response text is {type(text).__name__}")
    return text


# -- rate limiting ----------------------------------------------------------


class TokenBucket:
    def __init__(self, rate_per_s: float, capacity: float = 1.0, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate_per_s
        self.capacity = capacity
        self._tokens = capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
            self._last = now
            if self._tokens < 1:
                wait = (1 - self._tokens) / self.rate
                self._sleep(wait)
                self._last = self._clock()
                self._tokens = 0.0
            else:
                self._tokens -= 1


_BUCKETS: dict[str, TokenBucket] = {}
_BUCKETS_LOCK = threading.Lock()


def _bucket_for(ep: AgentEndpoint) -> TokenBucket | None:
    if not ep.requests_per_minute:
        return None
    with _BUCKETS_LOCK:
        if ep.provider not in _BUCKETS:
            _BUCKETS[ep.provider] = TokenBucket(ep.requests_per_minute / 60.0)
        return _BUCKETS[ep.provider]


# -- agent ------------------------------------------------------------------


@dataclass
class RemoteAgent:
    """An agent whose replies come from a remote chat model."""

    endpoint: AgentEndpoint
    client: httpx.Client | None = None
    sleep: Callable[[float], None] = time.sleep
    attempts_log: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.label = self.endpoint.label
        self.system_prompt = build_prompt(self.endpoint.prompt_variant)
        if self.client is None:
            self.client = httpx.Client()

    def _key(self) -> str:
        key = os.environ.get(self.endpoint.key_env, "")
        if not key:
            raise AuthenticationError(f"environment variable {self.endpoint.key_env} is not set")
        return key

    def prepare(self, history: Sequence[tuple[str, str]]) -> PreparedRequest:
        return prepare_request(self.endpoint, chat_messages(self.system_prompt, history), self._key())

    def _attempt(self, req: PreparedRequest) -> str:
        ep = self.endpoint
        try:
            resp = self.client.post(req.url, headers=req.headers, content=req.body, timeout=ep.timeout_ms / 1000)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"no response within {ep.timeout_ms} ms") from exc
        except httpx.TransportError as exc:
            raise TransientError(f"transport failure: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"HTTP {resp.status_code} from {ep.provider}")
        if resp.status_code == 429:
            raise RateLimitError("rate limited")
        if resp.status_code >= 500:
            raise TransientError(f"HTTP {resp.status_code} from {ep.provider}")
        if resp.status_code >= 400:
            log.error("raw %s response: %s", ep.provider, resp.text[:2000])
            raise MalformedResponseError(f"HTTP {resp.status_code} from {ep.provider}")
        try:
            payload = resp.json()
        except ValueError as exc:
            log.error("raw %s response: %s", ep.provider, resp.text[:2000])
            raise MalformedResponseError("response body is not JSON") from exc
        try:
            return extract_text(ep.provider, payload)
        except MalformedResponseError:
            log.error("raw %s response: %s", ep.provider, resp.text[:2000])
            raise

    def next_message(self, history: Sequence[tuple[str, str]]) -> str:
        ep = self.endpoint
        req = self.prepare(history)
        bucket = _bucket_for(ep)
        for attempt in range(1, ep.max_attempts + 1):
            if bucket is not None:
                bucket.acquire()
            try:
                text = self._attempt(req)
            except LLMError as exc:
                self.attempts_log.append({"attempt": attempt, "error": type(exc).__name__})
                log.info("%s attempt %d/%d failed: %s", ep.label, attempt, ep.max_attempts, exc)
                if not exc.retryable or attempt == ep.max_attempts:
                    raise
                self.sleep(ep.backoff_ms * 2 ** (attempt - 1) / 1000)
                continue
            self.attempts_log.append({"attempt": attempt, "error": None})
            return text.strip()
        raise AssertionError("unreachable")


def remote_agent(endpoint: AgentEndpoint, **kw: Any) -> RemoteAgent:
    return RemoteAgent(endpoint, **kw)
