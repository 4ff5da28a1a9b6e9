"""Chat-completions HTTP client with bounded retry.

Speaks the de-facto chat-completions JSON shape so any compatible serving
stack plugs in. Auth comes from the environment; logs carry payload hashes,
never the key or raw completion bodies.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass

import httpx

from textrts.backends.prompts import ChatRequest

log = logging.getLogger(__name__)

ENV_BASE_URL = "TEXTRTS_API_BASE"
ENV_API_KEY = "TEXTRTS_API_KEY"
ENV_MODEL = "TEXTRTS_MODEL"

_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class InferenceError(Exception):
    def __init__(self, message: str, status: int | None = None, attempts: int = 0):
        super().__init__(message)
        self.status = status
        self.attempts = attempts


@dataclass(frozen=True)
class Endpoint:
    base_url: str
    api_key: str = ""
    model: str = "default"

    @classmethod
    def from_env(cls) -> "Endpoint":
        base = os.environ.get(ENV_BASE_URL, "")
        if not base:
            raise InferenceError(f"{ENV_BASE_URL} is not set")
        return cls(
            base_url=base,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=os.environ.get(ENV_MODEL, "default"),
        )


def _payload(req: ChatRequest, model: str) -> dict:
    return {
        "model": model,
        "messages": [{"role": role, "content": content} for role, content in req.messages],
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }


def complete_http(
    req: ChatRequest,
    endpoint: Endpoint,
    transport: httpx.BaseTransport | None = None,
    sleep=time.sleep,
) -> str:
    """POST to <base>/v1/chat/completions; returns the first choice content.

    Retries 429/5xx/timeouts with 1s/2s/4s backoff up to req.retries extra
    attempts, then raises InferenceError. `transport` and `sleep` exist for
    tests.
    """
    url = endpoint.base_url.rstrip("/") + "/v1/chat/completions"
    model = req.model if req.model != "default" else endpoint.model
    payload = _payload(req, model)
    body = json.dumps(payload)
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    request_hash = hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]

    attempts = 0
    last_status: int | None = None
    with httpx.Client(transport=transport, timeout=req.timeout) as client:
        while attempts <= req.retries:
            attempts += 1
            try:
                resp = client.post(url, content=body, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                log.warning("request %s attempt %d transport error: %s", request_hash, attempts, type(exc).__name__)
                last_status = None
            else:
                if resp.status_code == 200:
                    try:
                        data = resp.json()
                        content = data["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise InferenceError(f"malformed response body: {exc}", status=200, attempts=attempts)
                    if not isinstance(content, str):
                        raise InferenceError("malformed response body: content not a string", status=200, attempts=attempts)
                    log.info(
                        "request %s ok after %d attempt(s), response hash %s",
                        request_hash,
                        attempts,
                        hashlib.sha256(content.encode("utf-8")).hexdigest()[:16],
                    )
                    return content
                last_status = resp.status_code
                if resp.status_code not in _RETRYABLE_STATUS:
                    raise InferenceError(f"HTTP {resp.status_code}", status=resp.status_code, attempts=attempts)
                log.warning("request %s attempt %d got HTTP %d", request_hash, attempts, resp.status_code)
            if attempts <= req.retries:
                sleep(1 << (attempts - 1))
    raise InferenceError("retry budget exhausted", status=last_status, attempts=attempts)


class HttpBackend:
    """Backend adapter bound to one endpoint."""

    def __init__(self, endpoint: Endpoint, transport: httpx.BaseTransport | None = None, sleep=time.sleep):
        self.endpoint = endpoint
        self.transport = transport
        self.sleep = sleep

    def complete(self, req: ChatRequest) -> str:
        return complete_http(req, self.endpoint, transport=self.transport, sleep=self.sleep)
