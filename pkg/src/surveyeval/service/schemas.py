"""Pydantic request/response models for the evaluation service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    config_digest: str


class IngestRequest(BaseModel):
    manifest_path: str
    mine_topics: bool = False


class IngestResponse(BaseModel):
    corpus_id: str
    entries: int
    human_count: int
    generated_count: int
    pair_count: int
    pairs_per_system: dict[str, int]
    warnings: list[str] = Field(default_factory=list)


class DecomposeRequest(BaseModel):
    manifest_path: str


class DecomposeResponse(BaseModel):
    surveys: int
    files: list[str]
    out_dir: str


class EmbedRequest(BaseModel):
    manifest_path: str


class EmbedResponse(BaseModel):
    dimension: int
    unit_count: int
    index_path: str
    index_digest: str


class EvaluateRequest(BaseModel):
    manifest_path: str
    verify: bool = False


class EvaluateResponse(BaseModel):
    report_path: str
    report: dict
    verify: dict | None = None


class ArenaRequest(BaseModel):
    manifest_path: str
    dimensions: list[str] | None = None


class ArenaResponse(BaseModel):
    arena_path: str
    arena: dict
    markdown: str


class VerifyRequest(BaseModel):
    pass


class VerifyResponse(BaseModel):
    checked: int
    mismatches: list[str]


class ReportRequest(BaseModel):
    report_path: str | None = None  # default: the work dir's report.json
    format: str = "markdown"  # markdown | json


class ReportResponse(BaseModel):
    format: str
    rendered: str


class CriteriaRequest(BaseModel):
    out_path: str


class CriteriaResponse(BaseModel):
    criteria_path: str
    kinds: list[str]


class ErrorBody(BaseModel):
    kind: str  # validation | provider | verify | internal
    message: str
