"""Client used by the CLI: in-process by default, HTTP with --server.

The in-process client mounts the app over an ASGI bridge, so CLI runs
need no running server yet exercise exactly the service code paths.
"""

from __future__ import annotations

import httpx

from ..config import PipelineConfig
from ..errors import ProviderUnavailable
from .app import create_app


class ServiceClient:
    def __init__(self, client: httpx.Client):
        self._client = client

    @classmethod
    def in_process(cls, config: PipelineConfig) -> "ServiceClient":
        from fastapi.testclient import TestClient

        return cls(TestClient(create_app(config), raise_server_exceptions=False))

    @classmethod
    def remote(cls, base_url: str, timeout: float = 600.0) -> "ServiceClient":
        return cls(httpx.Client(base_url=base_url.rstrip("/"), timeout=timeout))

    def get(self, path: str) -> tuple[int, dict]:
        return self._request("GET", path, None)

    def post(self, path: str, body: dict | None = None) -> tuple[int, dict]:
        return self._request("POST", path, body or {})

    def _request(self, method: str, path: str, body: dict | None) -> tuple[int, dict]:
        try:
            response = self._client.request(method, path, json=body)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"service unreachable: {exc}") from exc
        try:
            payload = response.json()
        except ValueError:
            payload = {"kind": "internal", "message": response.text}
        return response.status_code, payload
