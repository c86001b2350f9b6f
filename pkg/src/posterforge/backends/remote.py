"""HTTP adapter for hosted generators.

One wire format for every stage: POST {base_url}/v1/generate with a JSON
envelope {"task", "payload", "seed"}; responses are {"output": ...} with
images as base64 PNG. Timeouts and 5xx responses are retried up to the
configured limit with a constant Idempotency-Key across attempts; anything
else fails immediately.
"""

from __future__ import annotations

import base64
import os
import uuid

import httpx

from .base import (
    BackendRejected,
    BackendTimeout,
    BackendUnreachable,
    EndpointConfig,
    InvalidBackendOutput,
)


class RemoteClient:
    def __init__(self, config: EndpointConfig, transport=None):
        self.config = config
        self._transport = transport

    def _headers(self) -> dict[str, str]:
        headers = {"content-type": "application/json"}
        if self.config.auth_token_env:
            token = os.environ.get(self.config.auth_token_env)
            if token is None:
                raise ValueError(
                    f"auth token environment variable {self.config.auth_token_env!r} is not set"
                )
            headers["authorization"] = f"Bearer {token}"
        return headers

    def call(self, task: str, payload, seed: int | None = None):
        """POST one generation request; returns the decoded "output" field."""
        url = self.config.base_url.rstrip("/") + "/v1/generate"
        body = {"task": task, "payload": payload, "seed": seed}
        headers = self._headers()
        headers["idempotency-key"] = uuid.uuid4().hex
        attempts = self.config.max_retries + 1
        last_exc: Exception | None = None
        with httpx.Client(transport=self._transport, timeout=self.config.timeout) as client:
            for _ in range(attempts):
                try:
                    response = client.post(url, json=body, headers=headers)
                except httpx.TimeoutException as exc:
                    last_exc = BackendTimeout(f"timeout after {self.config.timeout}s: {exc}")
                    continue
                except httpx.TransportError as exc:
                    last_exc = BackendUnreachable(str(exc))
                    continue
                if response.status_code >= 500:
                    last_exc = BackendRejected(response.status_code, response.text[:200])
                    continue
                if response.status_code >= 400:
                    raise BackendRejected(response.status_code, response.text[:200])
                try:
                    doc = response.json()
                except ValueError as exc:
                    raise InvalidBackendOutput([f"response is not JSON: {exc}"]) from exc
                if not isinstance(doc, dict) or "output" not in doc:
                    raise InvalidBackendOutput(["response lacks an 'output' field"])
                return doc["output"]
        assert last_exc is not None
        raise last_exc


def decode_image_output(output) -> bytes:
    if not isinstance(output, str):
        raise InvalidBackendOutput(["image output must be a base64 string"])
    try:
        return base64.b64decode(output, validate=True)
    except Exception as exc:
        raise InvalidBackendOutput([f"image output is not valid base64: {exc}"]) from exc
