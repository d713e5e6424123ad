"""Synchronous client for an OpenAI-compatible chat-completions endpoint.

Retries timeouts, connection drops, 429s and 5xx responses with exponential
backoff; other HTTP errors and malformed bodies fail immediately. Credentials
come from an environment variable named in the profile and are never persisted
anywhere. Calls are stateless, so any number may be in flight concurrently;
callers bound parallelism with their own executor width.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Sequence

import requests

from ..errors import BackendError

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}")
        if not self.content:
            raise ValueError("turn content must be nonempty")


@dataclass(frozen=True)
class BackendProfile:
    base_url: str
    model: str
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")


def _headers(profile: BackendProfile) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(profile.api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    return headers


def chat_complete(profile: BackendProfile, turns: Sequence[ChatTurn]) -> str:
    """POST the turns and return the first choice's message content."""
    if not turns:
        raise ValueError("need at least one turn")
    url = profile.base_url.rstrip("/") + "/chat/completions"
    body = {
        "model": profile.model,
        "messages": [{"role": t.role, "content": t.content} for t in turns],
        "temperature": profile.temperature,
        "max_tokens": profile.max_tokens,
    }
    last_error = "no attempts made"
    for attempt in range(profile.max_attempts):
        if attempt > 0 and profile.backoff_base > 0:
            time.sleep(profile.backoff_base * 2 ** (attempt - 1))
        try:
            resp = requests.post(url, json=body, headers=_headers(profile), timeout=profile.timeout)
        except (requests.Timeout, requests.ConnectionError) as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = f"HTTP {resp.status_code}"
            continue
        if resp.status_code != 200:
            raise BackendError(f"chat completion failed: HTTP {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion body: {exc}") from exc
        if not isinstance(content, str):
            raise BackendError("completion content is not a string")
        return content
    raise BackendError(
        f"chat completion failed after {profile.max_attempts} attempts ({last_error})"
    )
