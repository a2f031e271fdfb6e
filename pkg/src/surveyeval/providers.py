"""HTTP providers for judge and embedding backends.

Both speak the common chat-completions / embeddings JSON shapes against
a configurable base URL. API keys come only from the environment
(JUDGE_API_KEY, EMBED_API_KEY), never from config files.
"""

from __future__ import annotations

import os
from typing import Sequence

import httpx

from .errors import JudgeUnavailable, ProviderUnavailable
from .judgekit import JudgeRequest


class HttpJudgeProvider:
    def __init__(self, base_url: str, model_id: str, *,
                 context_budget: int = 120_000,
                 timeout: float = 120.0,
                 api_key_env: str = "JUDGE_API_KEY",
                 transport: httpx.BaseTransport | None = None):
        self.model_id = model_id
        self.context_budget = context_budget
        headers = {}
        key = os.environ.get(api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), timeout=timeout,
            headers=headers, transport=transport,
        )

    def complete(self, request: JudgeRequest) -> str:
        body = {
            "model": self.model_id,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        try:
            response = self._client.post("/chat/completions", json=body)
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise JudgeUnavailable(f"judge backend failed: {exc}") from exc


class HttpEmbeddingProvider:
    def __init__(self, base_url: str, model_id: str, dimension: int, *,
                 timeout: float = 120.0,
                 api_key_env: str = "EMBED_API_KEY",
                 transport: httpx.BaseTransport | None = None):
        self.model_id = model_id
        self.dimension = dimension
        headers = {}
        key = os.environ.get(api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"), timeout=timeout,
            headers=headers, transport=transport,
        )

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = {"model": self.model_id, "input": list(texts)}
        try:
            response = self._client.post("/embeddings", json=body)
            response.raise_for_status()
            return [row["embedding"] for row in response.json()["data"]]
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"embedding backend failed: {exc}") from exc


class OfflineJudgeProvider:
    """Cache-only stand-in: any actual call means the cache was cold."""

    def __init__(self, model_id: str, context_budget: int = 120_000):
        self.model_id = model_id
        self.context_budget = context_budget

    def complete(self, request: JudgeRequest) -> str:
        raise JudgeUnavailable(
            "offline mode: response not in cache "
            f"(kind={request.kind}, attempt={request.attempt})"
        )


class OfflineEmbeddingProvider:
    def __init__(self, model_id: str, dimension: int):
        self.model_id = model_id
        self.dimension = dimension

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        raise ProviderUnavailable("offline mode: embedding provider disabled")
