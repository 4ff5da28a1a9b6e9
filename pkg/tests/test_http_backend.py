"""HTTP backend tests against a mock transport: payload shape, retry and
backoff behavior, auth header hygiene, response validation."""

from __future__ import annotations

import json
import logging

import httpx
import pytest

from textrts.backends.http import (
    ENV_API_KEY,
    ENV_BASE_URL,
    ENV_MODEL,
    Endpoint,
    HttpBackend,
    InferenceError,
    complete_http,
)
from textrts.backends.prompts import ChatRequest

EP = Endpoint(base_url="http://model.test", api_key="sk-test-secret", model="served-13b")


def req(retries: int = 3) -> ChatRequest:
    return ChatRequest(messages=(("system", "be brief"), ("user", "hello")), retries=retries)


def ok_body(text: str = "fine") -> dict:
    return {"choices": [{"message": {"content": text}}]}


class Script:
    """Mock transport that replays a response script and records requests."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests: list[httpx.Request] = []

    def transport(self) -> httpx.MockTransport:
        def handler(request: httpx.Request) -> httpx.Response:
            self.requests.append(request)
            item = self.responses.pop(0)
            if isinstance(item, Exception):
                raise item
            status, body = item
            return httpx.Response(status, json=body)

        return httpx.MockTransport(handler)


def run(script: Script, request: ChatRequest = None, endpoint: Endpoint = EP):
    sleeps: list[int] = []
    text = complete_http(
        request or req(),
        endpoint,
        transport=script.transport(),
        sleep=sleeps.append,
    )
    return text, sleeps


def test_success_round_trip():
    script = Script([(200, ok_body("1: <TRAIN PROBE>"))])
    text, sleeps = run(script)
    assert text == "1: <TRAIN PROBE>"
    assert sleeps == []

    sent = script.requests[0]
    assert sent.url == "http://model.test/v1/chat/completions"
    payload = json.loads(sent.content)
    assert payload["model"] == "served-13b"
    assert payload["messages"] == [
        {"role": "system", "content": "be brief"},
        {"role": "user", "content": "hello"},
    ]
    assert payload["temperature"] == 0.1
    assert payload["max_tokens"] == 1024


def test_request_model_overrides_endpoint_model():
    script = Script([(200, ok_body())])
    request = ChatRequest(messages=(("user", "x"),), model="tuned-7b")
    run(script, request=request)
    assert json.loads(script.requests[0].content)["model"] == "tuned-7b"


def test_retryable_statuses_back_off_then_succeed():
    script = Script([(429, {}), (503, {}), (200, ok_body("ok"))])
    text, sleeps = run(script)
    assert text == "ok"
    assert sleeps == [1, 2]
    assert len(script.requests) == 3


def test_transport_errors_retry():
    script = Script([httpx.ConnectError("refused"), (200, ok_body("ok"))])
    text, sleeps = run(script)
    assert text == "ok"
    assert sleeps == [1]


def test_non_retryable_status_fails_immediately():
    script = Script([(400, {"error": "bad request"})])
    with pytest.raises(InferenceError) as info:
        run(script)
    assert info.value.status == 400
    assert info.value.attempts == 1
    assert len(script.requests) == 1


def test_retry_budget_exhausted():
    script = Script([(503, {})] * 4)
    with pytest.raises(InferenceError, match="retry budget exhausted") as info:
        run(script)
    assert info.value.status == 503
    assert info.value.attempts == 4  # 1 initial + retries=3
    assert len(script.requests) == 4


def test_zero_retries_means_single_attempt():
    script = Script([(503, {})])
    with pytest.raises(InferenceError) as info:
        complete_http(req(retries=0), EP, transport=script.transport(), sleep=lambda s: None)
    assert info.value.attempts == 1


@pytest.mark.parametrize(
    "body",
    [
        {"choices": []},
        {"choices": [{"message": {}}]},
        {"unexpected": True},
        {"choices": [{"message": {"content": 7}}]},
    ],
)
def test_malformed_success_body_raises(body):
    script = Script([(200, body)])
    with pytest.raises(InferenceError, match="malformed response body"):
        run(script)


def test_auth_header_only_when_key_present():
    script = Script([(200, ok_body())])
    run(script)
    assert script.requests[0].headers["Authorization"] == "Bearer sk-test-secret"

    bare = Script([(200, ok_body())])
    run(bare, endpoint=Endpoint(base_url="http://model.test"))
    assert "Authorization" not in bare.requests[0].headers


def test_logs_never_carry_the_key_or_bodies(caplog):
    script = Script([(503, {}), (200, ok_body("secret-completion-text"))])
    with caplog.at_level(logging.DEBUG, logger="textrts.backends.http"):
        run(script)
    joined = "\n".join(r.getMessage() for r in caplog.records)
    assert joined  # retry + success lines logged
    assert "sk-test-secret" not in joined
    assert "secret-completion-text" not in joined
    assert "hello" not in joined


def test_endpoint_from_env(monkeypatch):
    monkeypatch.setenv(ENV_BASE_URL, "http://env.test/")
    monkeypatch.setenv(ENV_API_KEY, "sk-env")
    monkeypatch.setenv(ENV_MODEL, "env-model")
    ep = Endpoint.from_env()
    assert ep == Endpoint(base_url="http://env.test/", api_key="sk-env", model="env-model")

    monkeypatch.delenv(ENV_API_KEY)
    monkeypatch.delenv(ENV_MODEL)
    assert Endpoint.from_env() == Endpoint(base_url="http://env.test/")

    monkeypatch.delenv(ENV_BASE_URL)
    with pytest.raises(InferenceError, match=ENV_BASE_URL):
        Endpoint.from_env()


def test_base_url_trailing_slash_normalized():
    script = Script([(200, ok_body())])
    run(script, endpoint=Endpoint(base_url="http://model.test///"))
    assert str(script.requests[0].url) == "http://model.test/v1/chat/completions"


def test_backend_adapter_wires_transport_and_sleep():
    script = Script([(429, {}), (200, ok_body("done"))])
    sleeps: list[int] = []
    backend = HttpBackend(EP, transport=script.transport(), sleep=sleeps.append)
    assert backend.complete(req()) == "done"
    assert sleeps == [1]
