"""Chat-completion clients for the wording layer.

One production implementation speaking the common OpenAI-style JSON body over
HTTP, and a scripted stub so every test runs offline. Clients only transport
text; they never see or influence pedagogical decisions.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Protocol

import httpx


class ChatClientError(RuntimeError):
    """Transport, timeout, or malformed-response failure from a chat client."""


class ChatClient(Protocol):
    def complete(
        self,
        messages: list[dict],
        *,
        model: str,
        temperature: float,
        max_tokens: int,
        timeout_ms: int,
    ) -> str: ...


class HttpChatCompletionClient:
    """POSTs {model, temperature, max_tokens, messages} to a chat endpoint."""

    def __init__(self, endpoint: str, api_key: str | None = None, http: httpx.Client | None = None):
        self.endpoint = endpoint
        self.api_key = api_key
        self._http = http or httpx.Client()

    def complete(
        self,
        messages: list[dict],
        *,
        model: str,
        temperature: float,
        max_tokens: int,
        timeout_ms: int,
    ) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": model,
            "temperature": temperature,
            "max_tokens": max_tokens,
            "messages": messages,
        }
        try:
            response = self._http.post(
                self.endpoint, json=body, headers=headers, timeout=timeout_ms / 1000.0
            )
            response.raise_for_status()
            payload = response.json()
            text = payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ChatClientError(f"chat completion failed: {exc}") from exc
        if not isinstance(text, str):
            raise ChatClientError("chat completion returned a non-text payload")
        return text


@dataclass
class ScriptedChatClient:
    """Offline stub: returns queued replies in order, or raises queued errors."""

    replies: list[str | Exception] = field(default_factory=list)
    calls: list[dict] = field(default_factory=list)

    def complete(
        self,
        messages: list[dict],
        *,
        model: str,
        temperature: float,
        max_tokens: int,
        timeout_ms: int,
    ) -> str:
        self.calls.append(
            {
                "messages": messages,
                "model": model,
                "temperature": temperature,
                "max_tokens": max_tokens,
                "timeout_ms": timeout_ms,
            }
        )
        if not self.replies:
            raise ChatClientError("scripted client exhausted")
        item = self.replies.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def client_from_env(api_key_env: str, endpoint: str | None) -> HttpChatCompletionClient | None:
    """Build the HTTP client only when a key is present; never guess a key."""
    key = os.environ.get(api_key_env)
    endpoint = endpoint or os.environ.get("TUTOR_LLM_ENDPOINT")
    if not key or not endpoint:
        return None
    return HttpChatCompletionClient(endpoint=endpoint, api_key=key)
