"""FastAPI service wrapping the pipeline stages.

One app instance serves one pipeline configuration (work dir, providers,
caches); clients submit manifests and read back summaries and reports.
Paths in requests are resolved on the service host. Domain errors map to
HTTP 400/502/409 with a typed body the CLI translates into exit codes.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import pipeline, reporting
from ..config import PipelineConfig
from ..errors import MissingFile, PreconditionError, SurveyEvalError
from . import schemas

_STATUS_FOR_KIND = {"validation": 400, "provider": 502, "verify": 409}


def create_app(config: PipelineConfig) -> FastAPI:
    app = FastAPI(title="surveyeval", version="0.1.0")
    app.state.config = config

    @app.exception_handler(SurveyEvalError)
    async def domain_error(request: Request, exc: SurveyEvalError):
        return JSONResponse(
            status_code=_STATUS_FOR_KIND.get(exc.kind, 400),
            content=schemas.ErrorBody(kind=exc.kind, message=str(exc)).model_dump(),
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(config_digest=config.digest())

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(request: schemas.IngestRequest):
        summary = pipeline.run_ingest(config, request.manifest_path,
                                      mine_topics=request.mine_topics)
        return schemas.IngestResponse(**summary)

    @app.post("/decompose", response_model=schemas.DecomposeResponse)
    def decompose(request: schemas.DecomposeRequest):
        return schemas.DecomposeResponse(
            **pipeline.run_decompose(config, request.manifest_path)
        )

    @app.post("/embed", response_model=schemas.EmbedResponse)
    def embed(request: schemas.EmbedRequest):
        return schemas.EmbedResponse(
            **pipeline.run_embed(config, request.manifest_path)
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(request: schemas.EvaluateRequest):
        report = pipeline.run_evaluate(config, request.manifest_path)
        verify = pipeline.run_verify(config) if request.verify else None
        return schemas.EvaluateResponse(
            report_path=str(config.report_path), report=report, verify=verify,
        )

    @app.post("/arena", response_model=schemas.ArenaResponse)
    def arena(request: schemas.ArenaRequest):
        doc = pipeline.run_arena_stage(config, request.manifest_path,
                                       dimensions=request.dimensions)
        return schemas.ArenaResponse(
            arena_path=str(config.arena_path),
            arena=doc,
            markdown=reporting.render_arena_markdown(doc),
        )

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify():
        return schemas.VerifyResponse(**pipeline.run_verify(config))

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(request: schemas.ReportRequest):
        path = Path(request.report_path) if request.report_path else config.report_path
        if not path.exists():
            raise MissingFile(f"report not found: {path}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        if request.format == "json":
            rendered = json.dumps(doc, sort_keys=True, indent=2) + "\n"
        elif request.format == "markdown":
            rendered = reporting.render_markdown(doc)
        else:
            raise PreconditionError(f"unknown report format {request.format!r}")
        return schemas.ReportResponse(format=request.format, rendered=rendered)

    @app.post("/criteria", response_model=schemas.CriteriaResponse)
    def criteria(request: schemas.CriteriaRequest):
        return schemas.CriteriaResponse(
            **pipeline.run_criteria(config, request.out_path)
        )

    return app
