from __future__ import annotations

import hashlib
import json
import logging

import httpx
import pytest

from conftest import FIXTURES
from langacq.llm import (
    AgentEndpoint,
    AuthenticationError,
    MalformedResponseError,
    ProviderTimeout,
    RateLimitError,
    RemoteAgent,
    TokenBucket,
    build_prompt,
    chat_messages,
    load_endpoints,
)

FULL_SHA256 = "2976db82608b475e82bb0660939cf02a3031d7af989697310c7d931316469e0a"
REDUCED_SHA256 = "446893f18ad37a6803bac02ce82001b88eb60aa0967589c899f8a551d9260ed4"

HISTORY = [("environment", "banu tira lomo"), ("agent", "lumo sora kina"), ("environment", "moko lira bani")]
OK = {"choices": [{"message": {"role": "assistant", "content": "lumo banu kina"}}]}
REPLIES = {
    "openai": OK,
    "anthropic": {"content": [{"type": "text", "text": "lumo banu kina"}]},
    "gemini": {"candidates": [{"content": {"role": "model", "parts": [{"text": "lumo banu kina"}]}}]},
}


@pytest.fixture(autouse=True)
def api_key(monkeypatch):
    monkeypatch.setenv("KEY", "sk-secret-value")


def _ep(url, provider="openai", **kw):
    return AgentEndpoint(label=provider, provider=provider, base_url=url + "/v1", model="stub-model", key_env="KEY", **kw)


def test_prompts_are_byte_exact():
    full, reduced = build_prompt("full"), build_prompt("reduced")
    assert hashlib.sha256(full.encode()).hexdigest() == FULL_SHA256
    assert hashlib.sha256(reduced.encode()).hexdigest() == REDUCED_SHA256
    assert "Each word is bisyllabic" in full
    assert "bisyllabic" not in reduced
    assert "three successful conversation" in full and "three successful conversation" in reduced
    with pytest.raises(ValueError):
        build_prompt("tiny")


def test_role_mapping():
    msgs = chat_messages("SYS", HISTORY)
    assert [m["role"] for m in msgs] == ["system", "user", "assistant", "user"]
    assert msgs[2]["content"] == "lumo sora kina"


@pytest.mark.parametrize("provider", ["openai", "anthropic", "gemini"])
def test_request_matches_recorded_fixture(stub_server, provider):
    with stub_server([(200, REPLIES[provider])]) as srv:
        agent = RemoteAgent(_ep(srv.url, provider))
        assert agent.next_message(HISTORY) == "lumo banu kina"
    req = srv.requests[0]
    assert req["body"] == (FIXTURES / f"request_{provider}.json").read_bytes()
    body = json.loads(req["body"])
    if provider == "openai":
        assert req["path"] == "/v1/chat/completions"
        assert req["headers"]["authorization"] == "Bearer sk-secret-value"
        assert [m["role"] for m in body["messages"]] == ["system", "user", "assistant", "user"]
    elif provider == "anthropic":
        assert body["system"] == build_prompt("full")
        assert [m["role"] for m in body["messages"]] == ["user", "assistant", "user"]
    else:
        assert req["path"] == "/v1/models/stub-model:generateContent"
        assert [c["role"] for c in body["contents"]] == ["user", "model", "user"]


def test_request_bytes_are_stable(stub_server):
    with stub_server([(200, OK), (200, OK)]) as srv:
        agent = RemoteAgent(_ep(srv.url))
        agent.next_message(HISTORY)
        agent.next_message(HISTORY)
    assert srv.requests[0]["body"] == srv.requests[1]["body"]


def test_reply_trimmed(stub_server):
    reply = {"choices": [{"message": {"content": "  lumo banu kina\n"}}]}
    with stub_server([(200, reply)]) as srv:
        assert RemoteAgent(_ep(srv.url)).next_message(HISTORY) == "lumo banu kina"


def test_rate_limit_retried_with_backoff(stub_server, caplog):
    sleeps = []
    with stub_server([(429, {}), (429, {}), (200, OK)]) as srv, caplog.at_level(logging.INFO, "langacq.llm"):
        agent = RemoteAgent(_ep(srv.url, backoff_ms=100), sleep=sleeps.append)
        assert agent.next_message(HISTORY) == "lumo banu kina"
    assert len(srv.requests) == 3
    assert [a["attempt"] for a in agent.attempts_log] == [1, 2, 3]
    assert sleeps == [0.1, 0.2]
    assert sum("attempt" in r.message for r in caplog.records) == 2


def test_attempts_capped(stub_server):
    with stub_server([(503, {})] * 5) as srv:
        agent = RemoteAgent(_ep(srv.url, max_attempts=3), sleep=lambda s: None)
        with pytest.raises(Exception):
            agent.next_message(HISTORY)
    assert len(srv.requests) == 3


def test_rate_limit_exhaustion_raises(stub_server):
    with stub_server([(429, {})] * 2) as srv:
        agent = RemoteAgent(_ep(srv.url, max_attempts=2), sleep=lambda s: None)
        with pytest.raises(RateLimitError):
            agent.next_message(HISTORY)


@pytest.mark.parametrize(
    "response,exc",
    [((401, {"error": "bad key"}), AuthenticationError), ((200, {"unexpected": True}), MalformedResponseError), ((200, b"not json"), MalformedResponseError), ((400, {}), MalformedResponseError)],
)
def test_non_retryable_errors(stub_server, response, exc):
    with stub_server([response, (200, OK)]) as srv:
        agent = RemoteAgent(_ep(srv.url), sleep=lambda s: None)
        with pytest.raises(exc):
            agent.next_message(HISTORY)
    assert len(srv.requests) == 1


def test_missing_key(monkeypatch, stub_server):
    monkeypatch.delenv("KEY")
    with stub_server([]) as srv:
        with pytest.raises(AuthenticationError):
            RemoteAgent(_ep(srv.url)).next_message(HISTORY)
    assert srv.requests == []


def test_timeout_aborts_turn():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    client = httpx.Client(transport=httpx.MockTransport(handler))
    agent = RemoteAgent(_ep("http://stub"), client=client, sleep=lambda s: None)
    with pytest.raises(ProviderTimeout):
        agent.next_message(HISTORY)
    assert len(agent.attempts_log) == 1


def test_key_never_serialized(tmp_path):
    ep = _ep("http://stub")
    assert "sk-secret-value" not in json.dumps(ep.describe())
    path = tmp_path / "endpoints.json"
    path.write_text(json.dumps({"endpoints": [ep.describe()]}))
    assert load_endpoints(path) == {"openai": ep}


def test_endpoint_validation():
    with pytest.raises(ValueError):
        AgentEndpoint("x", "mystery", "http://x", "m", "KEY")
    with pytest.raises(ValueError):
        AgentEndpoint("x", "openai", "http://x", "m", "KEY", prompt_variant="tiny")


def test_token_bucket_paces_bursts():
    now = [0.0]
    waits = []

    def sleep(s):
        waits.append(s)
        now[0] += s

    bucket = TokenBucket(rate_per_s=2.0, clock=lambda: now[0], sleep=sleep)
    for _ in range(3):
        bucket.acquire()
    assert waits == [0.5, 0.5]


def test_remote_agent_in_session(stub_server, tinka):
    from langacq.env import EnvConfig
    from langacq.harness import run_session

    with stub_server([(200, OK)] * 3) as srv:
        t = run_session(RemoteAgent(_ep(srv.url)), tinka, EnvConfig(seed=1, t_max=3), prompt_variant="full")
    assert t.metrics.total_turns == 3
    assert t.config["prompt_variant"] == "full"
    assert "sk-secret-value" not in json.dumps(t.to_json())
