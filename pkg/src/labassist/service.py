"""HTTP service: /v1/ask, /v1/manuals, /v1/eval, /v1/health.

Request/response shapes are documented as JSON Schemas under schemas/ in the
repository. Every 200 from /v1/ask corresponds to exactly one appended query
log line, written before the response is returned.
"""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .assistant import Assistant, GroundedAnswer, load_templates
from .config import ServiceConfig
from .errors import (
    AdvisoryValidationFailed,
    EmptyText,
    LabAssistError,
    MalformedManual,
    ProviderUnavailable,
)
from .evaluation import load_dataset, load_rubric, run_evaluation
from .guardrails import ResponseMode, load_lexicons
from .manuals import ManualStore
from .providers import build_chat_provider, build_embedding_provider
from .querylog import QueryLog

logger = logging.getLogger(__name__)

HEALTH_CACHE_SECONDS = 30.0


class AskRequest(BaseModel):
    question: str
    mode: str = Field(default="retrieval")


class ManualUpload(BaseModel):
    filename: str
    text: str


class EvalRequest(BaseModel):
    dataset_path: str
    mode: str = Field(default="fixture")
    rubric_path: str | None = None


class ServiceState:
    """Mutable bits behind the app: catalog snapshot, providers, log."""

    def __init__(self, config: ServiceConfig, *, store=None, chat=None,
                 embedder=None, lexicons=None, templates=None, querylog=None):
        self.config = config
        self.store = store or ManualStore(config.manual_dir)
        self.chat = chat if chat is not None else build_chat_provider(
            config.chat_url, model=config.chat_model,
            timeout_ms=config.chat_timeout_ms, retries=config.chat_retries,
            max_inflight=config.max_inflight,
        )
        self.embedder = embedder if embedder is not None else build_embedding_provider(
            config.embed_url, model=config.embed_model,
            timeout_ms=config.embed_timeout_ms, retries=config.embed_retries,
            max_inflight=config.max_inflight,
        )
        self.lexicons = lexicons or load_lexicons(config.lexicon_path)
        self.templates = templates or load_templates(config.template_dir)
        self.querylog = querylog or QueryLog(
            config.log_path, max_bytes=config.log_max_bytes,
            backups=config.log_backups,
        )
        self._assistant: Assistant | None = None
        self._health_cache: tuple[float, dict] | None = None

    def assistant(self) -> Assistant:
        catalog = self.store.catalog()
        if self._assistant is None or self._assistant.catalog is not catalog:
            self._assistant = Assistant(
                catalog,
                self.config.retrieval_config(),
                self.lexicons,
                templates=self.templates,
                chat=self.chat,
                embedder=self.embedder,
                max_regenerations=self.config.max_regenerations,
            )
        return self._assistant

    def provider_reachability(self) -> dict:
        now = time.monotonic()
        if self._health_cache and now - self._health_cache[0] < HEALTH_CACHE_SECONDS:
            return self._health_cache[1]
        status = {
            "chat": self.chat.reachable() if self.chat is not None else None,
            "embed": self.embedder.reachable() if self.embedder is not None else None,
        }
        self._health_cache = (now, status)
        return status


def _answer_payload(answer: GroundedAnswer) -> dict:
    return {
        "body": answer.body,
        "pattern": answer.pattern.value,
        "refusal": answer.refusal.value,
        "language": answer.language.value,
        "mode": answer.mode.value,
        "references": [
            {"file": file, "sections": sections}
            for file, sections in answer.references
        ],
        "hits": [
            {
                "doc": h.chunk.doc,
                "section_id": h.chunk.section_id,
                "score": h.score,
                "method": h.method.value,
            }
            for h in answer.hits
        ],
        "provider_calls": answer.provider_calls,
        "fallback_used": answer.fallback_used,
    }


def create_app(config: ServiceConfig | None = None, **overrides) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config, **overrides)
    app = FastAPI(title="labassist", version=__version__)
    app.state.service = state

    @app.post("/v1/ask")
    def ask(request: AskRequest) -> dict:
        try:
            mode = ResponseMode(request.mode)
        except ValueError:
            raise HTTPException(400, detail={"error": "unknown_mode",
                                             "detail": request.mode})
        started = time.monotonic()
        try:
            answer = state.assistant().answer(request.question, mode)
        except EmptyText:
            raise HTTPException(400, detail={"error": "empty_question"})
        except ProviderUnavailable as exc:
            raise HTTPException(502, detail={"error": "provider_unavailable",
                                             "detail": str(exc)})
        except AdvisoryValidationFailed as exc:
            raise HTTPException(500, detail={"error": "advisory_validation_failed",
                                             "detail": str(exc),
                                             "violations": exc.violations})
        latency_ms = (time.monotonic() - started) * 1000.0
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "question": request.question,
            "mode": mode.value,
            "language": answer.language.value,
            "grounded": answer.pattern.value not in ("B",),
            "pattern": answer.pattern.value,
            "refusal": answer.refusal.value,
            "provider_calls": answer.provider_calls,
            "fallback_used": answer.fallback_used,
            "latency_ms": latency_ms,
            "hits": [
                {"doc": h.chunk.doc, "section_id": h.chunk.section_id,
                 "score": h.score}
                for h in answer.hits
            ],
        }
        # Log before responding: a failed append must fail the request.
        state.querylog.append(entry)
        return _answer_payload(answer)

    @app.get("/v1/manuals")
    def list_manuals() -> dict:
        catalog = state.store.catalog()
        return {
            "manuals": [
                {
                    "logical_name": doc.logical_name,
                    "version": doc.version,
                    "source_file": doc.source_file,
                    "language": doc.language.value,
                    "sections": [
                        {"id": s.id, "title": s.title, "tags": list(s.tags)}
                        for s in doc.sections
                    ],
                }
                for doc in catalog.resolved_documents()
            ]
        }

    @app.post("/v1/manuals")
    def upload_manual(upload: ManualUpload) -> dict:
        try:
            catalog = state.store.add_document(upload.text, upload.filename)
        except MalformedManual as exc:
            raise HTTPException(422, detail={"error": type(exc).__name__,
                                             "detail": str(exc)})
        return {
            "ingested": upload.filename,
            "documents": len(catalog.documents),
            "resolved": len(catalog.resolved),
        }

    @app.post("/v1/eval")
    def evaluate(request: EvalRequest) -> dict:
        if request.mode not in ("fixture", "live"):
            raise HTTPException(400, detail={"error": "unknown_mode",
                                             "detail": request.mode})
        dataset_path = Path(request.dataset_path)
        if not dataset_path.exists():
            raise HTTPException(404, detail={"error": "dataset_not_found",
                                             "detail": str(dataset_path)})
        if request.mode == "live" and state.embedder is None:
            raise HTTPException(502, detail={"error": "no_embedding_provider"})
        rubric = None
        if request.rubric_path:
            rubric_path = Path(request.rubric_path)
            if not rubric_path.exists():
                raise HTTPException(404, detail={"error": "rubric_not_found",
                                                 "detail": str(rubric_path)})
            rubric = load_rubric(rubric_path)
        try:
            dataset = load_dataset(dataset_path)
            report = run_evaluation(
                dataset, mode=request.mode, embedder=state.embedder,
                lexicons=state.lexicons, rubric=rubric,
            )
        except ProviderUnavailable as exc:
            raise HTTPException(502, detail={"error": "provider_unavailable",
                                             "detail": str(exc)})
        except LabAssistError as exc:
            raise HTTPException(422, detail={"error": type(exc).__name__,
                                             "detail": str(exc)})
        return report.to_dict()

    @app.get("/v1/health")
    def health() -> dict:
        catalog = state.store.catalog()
        return {
            "status": "ok",
            "version": __version__,
            "catalog": {
                "documents": len(catalog.resolved),
                "sections": catalog.section_count(),
            },
            "providers": state.provider_reachability(),
            "templates": {
                f"{name}_sha256": digest
                for name, digest in state.templates.checksums().items()
            },
        }

    return app
