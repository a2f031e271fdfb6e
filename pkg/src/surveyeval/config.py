"""Pipeline configuration: a flat ``key = value`` file plus defaults.

Secrets never live in the file; API keys are read from JUDGE_API_KEY
and EMBED_API_KEY at provider construction. The config digest ties every
report back to the exact settings that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import MalformedConfig

DEFAULT_TEMPERATURE = 0.5
DEFAULT_TOP_N = {"outline": 5, "content": 5, "reference": 20}


@dataclass
class PipelineConfig:
    # providers: "mock" runs fully offline, "http" talks to live backends
    judge_provider: str = "mock"
    embed_provider: str = "mock"
    judge_base_url: str = ""
    judge_model: str = ""
    embed_base_url: str = ""
    embed_model: str = ""
    embed_dimension: int = 64
    context_budget: int = 120_000

    temperature: float = DEFAULT_TEMPERATURE
    top_n_outline: int = DEFAULT_TOP_N["outline"]
    top_n_content: int = DEFAULT_TOP_N["content"]
    top_n_reference: int = DEFAULT_TOP_N["reference"]

    max_in_flight: int = 4
    seed: int = 0

    work_dir: str = "out"
    cache_path: str = ""  # default: <work_dir>/judge_cache.jsonl
    index_path: str = ""  # default: <work_dir>/index.json
    mock_script_path: str = ""
    criteria_path: str = ""
    offline: bool = False

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise MalformedConfig(f"temperature {self.temperature} outside [0, 2]")
        for name in ("top_n_outline", "top_n_content", "top_n_reference"):
            if getattr(self, name) < 1:
                raise MalformedConfig(f"{name} must be >= 1")
        if self.max_in_flight < 1:
            raise MalformedConfig("max_in_flight must be >= 1")
        if not self.cache_path:
            self.cache_path = str(Path(self.work_dir) / "judge_cache.jsonl")
        if not self.index_path:
            self.index_path = str(Path(self.work_dir) / "index.json")

    @property
    def decompose_dir(self) -> Path:
        return Path(self.work_dir) / "decomposed"

    @property
    def verdicts_dir(self) -> Path:
        return Path(self.work_dir) / "verdicts"

    @property
    def report_path(self) -> Path:
        return Path(self.work_dir) / "report.json"

    @property
    def arena_path(self) -> Path:
        return Path(self.work_dir) / "arena.json"

    def top_n_for(self, component: str) -> int:
        return {
            "outline": self.top_n_outline,
            "content": self.top_n_content,
            "reference": self.top_n_reference,
        }[component]

    def digest(self) -> str:
        payload = {f.name: getattr(self, f.name) for f in fields(self)}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from a ``key = value`` file plus overrides.

    Lines starting with ``#`` are comments. Unknown keys are rejected so
    typos fail loudly.
    """
    values: dict[str, object] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise MalformedConfig(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise MalformedConfig(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw_value = stripped.partition("=")
            values[key.strip()] = raw_value.strip()
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    typed: dict[str, object] = {}
    known = {f.name: f.type for f in fields(PipelineConfig)}
    for key, raw in values.items():
        if key not in known:
            raise MalformedConfig(f"unknown config key {key!r}")
        typed[key] = _coerce(key, raw, known[key])
    try:
        return PipelineConfig(**typed)  # type: ignore[arg-type]
    except TypeError as exc:
        raise MalformedConfig(str(exc)) from exc


def _coerce(key: str, raw: object, type_name: object) -> object:
    if not isinstance(raw, str):
        return raw
    type_name = str(type_name)
    try:
        if type_name == "int":
            return int(raw)
        if type_name == "float":
            return float(raw)
        if type_name == "bool":
            if raw.lower() not in _BOOL_VALUES:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_VALUES[raw.lower()]
        return raw
    except ValueError as exc:
        raise MalformedConfig(f"config key {key!r}: {exc}") from exc
