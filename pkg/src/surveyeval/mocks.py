"""Deterministic provider stand-ins for offline runs and tests.

The mock embedding provider expands a seeded hash of the text into a
pseudo-random unit vector, so identical text always embeds identically.
An override table can force the cosine between a text and an anchor
text to an exact target (the override vector is built by Gram-Schmidt
against the anchor's hash vector).

The mock judge answers in the same fenced block format a live model is
instructed to use, so the full render-cache-parse path is exercised.
Verdicts come from, in order: an override keyed by the task's payload
digest, a per-kind default, or bytes of a seeded hash of the payload
digest (pure, so replay and caching behave exactly as with a live
provider).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ZeroVector
from .judgekit import JudgeRequest, JudgeTask, Verdict, parse_verdict, render_prompt

DEFAULT_DIMENSION = 64
DEFAULT_CONTEXT_BUDGET = 120_000


def _hash_bytes(*parts: str) -> bytes:
    return hashlib.sha256("|".join(parts).encode("utf-8")).digest()


def mock_embed(text: str, seed: int, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Pure (seed, text) -> unit vector."""
    digest = _hash_bytes("embed", str(seed), text)
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    vec = rng.standard_normal(dimension)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:  # unreachable for sane dimensions, guard anyway
        raise ZeroVector("mock embedding collapsed to zero")
    return vec / norm


@dataclass
class CosineOverride:
    anchor_text: str
    target_cosine: float


class MockEmbeddingProvider:
    """Embedding provider contract backed by seeded hash vectors."""

    def __init__(self, seed: int = 0, dimension: int = DEFAULT_DIMENSION,
                 overrides: dict[str, CosineOverride] | None = None):
        self.seed = seed
        self.dimension = dimension
        self.model_id = f"mock-embed-{seed}-d{dimension}"
        self.overrides = overrides or {}

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [list(self._vector(text)) for text in texts]

    def _vector(self, text: str) -> np.ndarray:
        override = self.overrides.get(text)
        if override is None:
            return mock_embed(text, self.seed, self.dimension)
        return self._override_vector(text, override)

    def _override_vector(self, text: str, override: CosineOverride) -> np.ndarray:
        # Gram-Schmidt: build a unit vector at the requested angle to the
        # anchor's hash vector.
        t = override.target_cosine
        if not -1.0 <= t <= 1.0:
            raise ValueError(f"target cosine {t} outside [-1, 1]")
        anchor = mock_embed(override.anchor_text, self.seed, self.dimension)
        raw = mock_embed(text + "\x00orthogonal-salt", self.seed, self.dimension)
        ortho = raw - np.dot(raw, anchor) * anchor
        norm = float(np.linalg.norm(ortho))
        if norm == 0.0:
            raise ZeroVector("salt vector collinear with anchor")
        ortho = ortho / norm
        return t * anchor + math.sqrt(max(0.0, 1.0 - t * t)) * ortho


@dataclass
class MockScript:
    """Scripted verdicts: per-kind defaults plus exact overrides.

    Defaults by kind:
      children_coherence / citation_support: bool (uniform) or bool list
        (cycled over the judged items),
      outline_quality / reference_quality: int 1-5,
      content_quality: list of five ints,
      reference_relevance: bool,
      pairwise: "A", "B", or "coin" (seeded hash flip per payload),
      topic_label: a label string, or "echo" to return the title from
        the prompt.

    Overrides map a payload digest to an exact verdict value, or to
    {"raw_text": ...} to make the provider return arbitrary text (for
    exercising unparseable-verdict handling).
    """

    seed: int = 0
    defaults: dict[str, object] = field(default_factory=dict)
    overrides: dict[str, object] = field(default_factory=dict)

    def add_override(self, task: JudgeTask, value: object) -> None:
        self.overrides[task.payload_digest()] = value

    @classmethod
    def from_file(cls, path: str | Path) -> "MockScript":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            seed=int(doc.get("seed", 0)),
            defaults=dict(doc.get("defaults", {})),
            overrides=dict(doc.get("overrides", {})),
        )


def _fenced(lines: Sequence[str]) -> str:
    return "```\n" + "\n".join(lines) + "\n```"


def _bool_lines(value: object, n: int) -> list[str]:
    if isinstance(value, bool):
        flags = [value] * n
    else:
        pattern = list(value)  # type: ignore[arg-type]
        flags = [bool(pattern[i % len(pattern)]) for i in range(n)]
    return ["yes" if f else "no" for f in flags]


class MockJudgeProvider:
    """Judge provider contract backed by a :class:`MockScript`."""

    def __init__(self, script: MockScript | None = None,
                 context_budget: int = DEFAULT_CONTEXT_BUDGET):
        self.script = script or MockScript()
        self.model_id = f"mock-judge-{self.script.seed}"
        self.context_budget = context_budget

    def complete(self, request: JudgeRequest) -> str:
        override = self.script.overrides.get(request.payload_digest)
        if isinstance(override, dict) and "raw_text" in override:
            return override["raw_text"]
        if override is not None:
            return self._render(request, override)
        default = self.script.defaults.get(request.kind)
        if default is not None:
            return self._render(request, default)
        return self._render(request, self._hashed_value(request))

    def _render(self, request: JudgeRequest, value: object) -> str:
        kind = request.kind
        n = request.item_count or 1
        if kind in ("children_coherence", "citation_support"):
            return _fenced(_bool_lines(value, n))
        if kind in ("outline_quality", "reference_quality"):
            return _fenced([str(int(value))])  # type: ignore[arg-type]
        if kind == "content_quality":
            scores = list(value)  # type: ignore[arg-type]
            return _fenced([str(int(s)) for s in scores])
        if kind == "reference_relevance":
            return _fenced(_bool_lines(bool(value), 1))
        if kind == "pairwise":
            if value == "coin":
                byte = _hash_bytes("coin", str(self.script.seed), request.payload_digest)[0]
                value = "A" if byte % 2 == 0 else "B"
            return _fenced([str(value)])
        if kind == "topic_label":
            if value == "echo":
                value = _title_from_prompt(request.prompt)
            return _fenced([str(value)])
        raise ValueError(f"mock cannot render kind {kind!r}")

    def _hashed_value(self, request: JudgeRequest) -> object:
        digest = _hash_bytes("judge", str(self.script.seed), request.payload_digest)
        kind = request.kind
        if kind in ("children_coherence", "citation_support"):
            n = request.item_count or 1
            return [digest[i % len(digest)] % 8 < 7 for i in range(n)]
        if kind in ("outline_quality", "reference_quality"):
            return 3 + digest[0] % 3
        if kind == "content_quality":
            return [3 + digest[i] % 3 for i in range(5)]
        if kind == "reference_relevance":
            return digest[0] % 8 < 7
        if kind == "pairwise":
            return "A" if digest[0] % 2 == 0 else "B"
        if kind == "topic_label":
            return f"topic-{digest.hex()[:8]}"
        raise ValueError(f"mock cannot script kind {kind!r}")


def _title_from_prompt(prompt: str) -> str:
    for line in prompt.splitlines():
        if line.startswith("Survey title:"):
            return line.split(":", 1)[1].strip()
    return ""


def mock_judge(task: JudgeTask, script: MockScript) -> Verdict:
    """Render, answer, and parse one task without a cache."""
    provider = MockJudgeProvider(script)
    raw = provider.complete(JudgeRequest(
        prompt=render_prompt(task),
        temperature=task.temperature,
        kind=task.kind,
        payload_digest=task.payload_digest(),
        item_count=task.payload.get("n"),
    ))
    return parse_verdict(task, raw)
