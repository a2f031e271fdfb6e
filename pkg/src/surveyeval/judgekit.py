"""Judge provider contract, verdict parsing, and the replay cache.

All judged operations go through :func:`cached_call`: the rendered
prompt is digested together with the model and template ids, the raw
response is stored in an append-only JSONL cache before parsing, and a
warm cache replays byte-identical responses with the provider disabled.

Unparseable responses are re-asked at most twice; the re-ask prompt
carries an attempt marker so its cache entry is distinct from the
original. After the re-asks the failure policy is per operation (see
each judge_* function).
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .errors import PreconditionError, TieVerdict, UnparseableVerdict
from .templates import DEFAULT_CRITERIA, TEMPLATES

KINDS = (
    "children_coherence", "outline_quality", "content_quality",
    "reference_quality", "citation_support", "reference_relevance",
    "pairwise", "topic_label",
)
MAX_REASKS = 2
CONTENT_DIMENSIONS = ("coverage", "structure", "relevance", "language", "criticalness")
TRUNCATION_MARKER = "\n[... middle elided ...]\n"

_BLOCK_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


@dataclass
class JudgeTask:
    kind: str
    payload: dict
    prompt_template_id: str
    temperature: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown judge task kind {self.kind!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")

    def payload_digest(self) -> str:
        canonical = json.dumps(
            {"kind": self.kind, "payload": self.payload},
            sort_keys=True, separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class JudgeRequest:
    """What a provider sees for one call.

    Live providers only need the prompt and temperature; kind, payload
    digest, and item count let scripted test doubles answer in shape.
    """

    prompt: str
    temperature: float
    kind: str
    payload_digest: str
    attempt: int = 0
    item_count: int | None = None


class JudgeProvider(Protocol):
    model_id: str
    context_budget: int  # characters available for prompt material

    def complete(self, request: JudgeRequest) -> str: ...


@dataclass
class Verdict:
    kind: str
    value: object
    raw_text: str


class JudgeCache:
    """Append-only response cache keyed by prompt digest.

    Safe for concurrent readers and writers; appends are serialized and
    idempotent per digest.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                record = json.loads(line)
                self._entries[record["digest"]] = record["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, digest: str) -> str | None:
        return self._entries.get(digest)

    def put(self, digest: str, model_id: str, template_id: str, response: str) -> None:
        with self._lock:
            if digest in self._entries:
                return
            self._entries[digest] = response
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                record = {
                    "digest": digest,
                    "model_id": model_id,
                    "template_id": template_id,
                    "response": response,
                    "timestamp": time.time(),
                }
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record) + "\n")

    def content_digest(self) -> str:
        """Order-independent digest over (digest, response) pairs."""
        h = hashlib.sha256()
        for digest in sorted(self._entries):
            h.update(digest.encode("ascii"))
            h.update(self._entries[digest].encode("utf-8"))
        return h.hexdigest()


def render_prompt(task: JudgeTask, attempt: int = 0, templates: dict[str, str] | None = None) -> str:
    """Pure rendering of a task into its prompt text."""
    registry = templates if templates is not None else TEMPLATES
    if task.prompt_template_id not in registry:
        raise ValueError(f"unknown template id {task.prompt_template_id!r}")
    note = ""
    if attempt > 0:
        note = (
            f"\n\nThis is re-ask {attempt}: your previous answer was not in the"
            " required format. Answer strictly as instructed."
        )
    return registry[task.prompt_template_id].format(attempt_note=note, **task.payload)


def call_digest(model_id: str, template_id: str, prompt: str) -> str:
    material = "\x1f".join((model_id, template_id, prompt))
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def truncate_for_budget(text: str, budget: int) -> str:
    """Keep the head (60% of budget) and tail (20%) with an elision marker."""
    if len(text) <= budget:
        return text
    head = int(budget * 0.6)
    tail = int(budget * 0.2)
    return text[:head] + TRUNCATION_MARKER + text[len(text) - tail:]


def _extract_block_lines(raw: str) -> list[str]:
    blocks = _BLOCK_RE.findall(raw)
    if not blocks:
        raise UnparseableVerdict("no fenced answer block in response")
    lines = [line.strip() for line in blocks[-1].strip().splitlines()]
    return [line for line in lines if line]


def _parse_bools(lines: list[str], expected: int) -> list[bool]:
    if len(lines) != expected:
        raise UnparseableVerdict(f"expected {expected} yes/no lines, got {len(lines)}")
    values = []
    for line in lines:
        token = line.lower().rstrip(".")
        if token == "yes":
            values.append(True)
        elif token == "no":
            values.append(False)
        else:
            raise UnparseableVerdict(f"expected yes/no, got {line!r}")
    return values


def _parse_score(line: str) -> int:
    try:
        value = int(line)
    except ValueError as exc:
        raise UnparseableVerdict(f"expected an integer score, got {line!r}") from exc
    if not 1 <= value <= 5:
        raise UnparseableVerdict(f"score {value} outside 1..5")
    return value


def parse_verdict(task: JudgeTask, raw: str) -> Verdict:
    """Parse a raw response into a kind-matched verdict.

    Pure: reparsing a cached response always yields the same verdict.
    Raises UnparseableVerdict (or TieVerdict for a pairwise tie).
    """
    lines = _extract_block_lines(raw)
    kind = task.kind
    if kind in ("children_coherence", "citation_support"):
        expected = len(task.payload.get("_items", ()))
        value: object = _parse_bools(lines, expected)
    elif kind in ("outline_quality", "reference_quality"):
        if len(lines) != 1:
            raise UnparseableVerdict(f"expected one score line, got {len(lines)}")
        value = _parse_score(lines[0])
    elif kind == "content_quality":
        if len(lines) != 5:
            raise UnparseableVerdict(f"expected five score lines, got {len(lines)}")
        value = tuple(_parse_score(line) for line in lines)
    elif kind == "reference_relevance":
        value = _parse_bools(lines, 1)[0]
    elif kind == "pairwise":
        if len(lines) != 1:
            raise UnparseableVerdict(f"expected one winner line, got {len(lines)}")
        token = lines[0].upper().rstrip(".")
        if token == "TIE":
            raise TieVerdict("judge declared a tie")
        if token not in ("A", "B"):
            raise UnparseableVerdict(f"expected A or B, got {lines[0]!r}")
        value = token
    elif kind == "topic_label":
        if len(lines) != 1:
            raise UnparseableVerdict(f"expected one label line, got {len(lines)}")
        value = lines[0]
    else:  # pragma: no cover - guarded by JudgeTask
        raise UnparseableVerdict(f"unknown kind {kind!r}")
    return Verdict(kind=kind, value=value, raw_text=raw)


def cached_call(
    task: JudgeTask,
    provider: JudgeProvider,
    cache: JudgeCache,
    attempt: int = 0,
    templates: dict[str, str] | None = None,
) -> Verdict:
    """One judge call through the cache; the raw response is stored
    before parsing so a bad answer is still replayable."""
    prompt = render_prompt(task, attempt=attempt, templates=templates)
    digest = call_digest(provider.model_id, task.prompt_template_id, prompt)
    raw = cache.get(digest)
    if raw is None:
        raw = provider.complete(JudgeRequest(
            prompt=prompt,
            temperature=task.temperature,
            kind=task.kind,
            payload_digest=task.payload_digest(),
            attempt=attempt,
            item_count=task.payload.get("n"),
        ))
        cache.put(digest, provider.model_id, task.prompt_template_id, raw)
    return parse_verdict(task, raw)


def _call_with_reasks(task, provider, cache, templates=None, attempt_base=0) -> Verdict:
    last: UnparseableVerdict | None = None
    for offset in range(MAX_REASKS + 1):
        try:
            return cached_call(task, provider, cache,
                               attempt=attempt_base + offset, templates=templates)
        except TieVerdict:
            raise
        except UnparseableVerdict as exc:
            last = exc
    raise last  # type: ignore[misc]


def _numbered(items: Sequence[str]) -> str:
    return "\n".join(f"{i + 1}. {item}" for i, item in enumerate(items))


def judge_children_coherence(
    parent_path: Sequence[str],
    children: Sequence[str],
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    topic: str = "",
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
) -> tuple[list[bool], str | None]:
    """One batched prompt per parent; one boolean per child.

    After two failed re-asks the node is failed closed: all-false plus a
    diagnostic string instead of an exception, so one bad node cannot
    sink a whole outline.
    """
    if not children:
        raise PreconditionError("children must be non-empty")
    parent = " > ".join(parent_path) if parent_path else (topic or "the survey as a whole")
    task = JudgeTask(
        kind="children_coherence",
        payload={
            "parent": parent,
            "children_block": _numbered(children),
            "n": len(children),
            "_items": list(children),
        },
        prompt_template_id="children_coherence/v1",
        temperature=temperature,
    )
    try:
        verdict = _call_with_reasks(task, provider, cache, templates)
    except UnparseableVerdict as exc:
        return [False] * len(children), f"unparseable after {MAX_REASKS} re-asks: {exc}"
    return list(verdict.value), None


def judge_outline_quality(
    topic: str,
    rendered_outline: str,
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    criteria: str | None = None,
    templates: dict[str, str] | None = None,
) -> int:
    if not rendered_outline.strip():
        raise PreconditionError("outline rendering is empty")
    task = JudgeTask(
        kind="outline_quality",
        payload={
            "topic": topic,
            "outline": rendered_outline,
            "criteria": criteria or DEFAULT_CRITERIA["outline_quality"],
        },
        prompt_template_id="outline_quality/v1",
        temperature=temperature,
    )
    return _call_with_reasks(task, provider, cache, templates).value


def judge_content_quality(
    topic: str,
    content: str,
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
) -> tuple[int, int, int, int, int]:
    """Five scores in reporting order: Coverage, Structure, Relevance,
    Language, Criticalness. Long content is truncated head+tail to the
    provider's context budget."""
    if not content.strip():
        raise PreconditionError("content is empty")
    task = JudgeTask(
        kind="content_quality",
        payload={
            "topic": topic,
            "content": truncate_for_budget(content, provider.context_budget),
        },
        prompt_template_id="content_quality/v1",
        temperature=temperature,
    )
    return tuple(_call_with_reasks(task, provider, cache, templates).value)


def judge_reference_quality(
    topic: str,
    references: Sequence[str],
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    criteria: str | None = None,
    templates: dict[str, str] | None = None,
) -> int:
    if not references:
        raise PreconditionError("reference list is empty")
    task = JudgeTask(
        kind="reference_quality",
        payload={
            "topic": topic,
            "references": _numbered(references),
            "n": len(references),
            "criteria": criteria or DEFAULT_CRITERIA["reference_quality"],
        },
        prompt_template_id="reference_quality/v1",
        temperature=temperature,
    )
    return _call_with_reasks(task, provider, cache, templates).value


def judge_citation_support(
    sentence: str,
    cited_reference_texts: Sequence[str],
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
) -> list[bool]:
    """One support judgment per cited reference, batched per sentence."""
    if not cited_reference_texts:
        raise PreconditionError("no cited references to judge")
    task = JudgeTask(
        kind="citation_support",
        payload={
            "sentence": sentence,
            "references_block": _numbered(cited_reference_texts),
            "n": len(cited_reference_texts),
            "_items": list(cited_reference_texts),
        },
        prompt_template_id="citation_support/v1",
        temperature=temperature,
    )
    return list(_call_with_reasks(task, provider, cache, templates).value)


def judge_reference_relevance(
    topic: str,
    reference_text: str,
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
) -> bool:
    task = JudgeTask(
        kind="reference_relevance",
        payload={"topic": topic, "reference": reference_text},
        prompt_template_id="reference_relevance/v1",
        temperature=temperature,
    )
    return _call_with_reasks(task, provider, cache, templates).value


def judge_pairwise(
    dimension: str,
    topic: str,
    candidate_a: str,
    candidate_b: str,
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
    tie_log: list[str] | None = None,
) -> str:
    """Forced-choice winner, "A" or "B".

    A tie verdict is re-asked once; a second tie falls back to "A" so
    runs stay replayable. Fallbacks are recorded in ``tie_log``.
    """
    if dimension not in ("outline", "content", "reference"):
        raise PreconditionError(f"unknown pairwise dimension {dimension!r}")
    per_side = max(provider.context_budget // 2, 1)
    payload = {
        "dimension": dimension,
        "topic": topic,
        "candidate_a": truncate_for_budget(candidate_a, per_side),
        "candidate_b": truncate_for_budget(candidate_b, per_side),
    }
    task = JudgeTask(kind="pairwise", payload=payload,
                     prompt_template_id="pairwise/v1", temperature=temperature)
    for attempt_base in (0, MAX_REASKS + 1):  # second round is the tie re-ask
        try:
            return _call_with_reasks(task, provider, cache, templates, attempt_base).value
        except TieVerdict:
            continue
    if tie_log is not None:
        tie_log.append(f"pairwise tie fallback to A (dimension={dimension}, topic={topic})")
    return "A"


def mine_topic_label(
    title: str,
    provider: JudgeProvider,
    cache: JudgeCache,
    *,
    temperature: float = 0.5,
    templates: dict[str, str] | None = None,
) -> str:
    if not title.strip():
        raise PreconditionError("title must be non-empty")
    task = JudgeTask(
        kind="topic_label",
        payload={"title": title},
        prompt_template_id="topic_label/v1",
        temperature=temperature,
    )
    return _call_with_reasks(task, provider, cache, templates).value
