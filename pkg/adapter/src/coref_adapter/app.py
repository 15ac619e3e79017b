"""FastAPI service wiring the wire protocols to a model backend.

Inference is serialized behind a lock (one model, one GPU/CPU slot);
clients tolerate the queuing latency.  All offsets in responses are
unicode code points into the request text.
"""

from __future__ import annotations

import logging
import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import make_resolver, make_tagger
from .config import AdapterConfig

log = logging.getLogger(__name__)


class ResolveRequest(BaseModel):
    chunk_id: int
    text: str


class Mention(BaseModel):
    start: int
    end: int


class ResolveResponse(BaseModel):
    mentions: list[Mention]
    clusters: list[list[int]]


class TagRequest(BaseModel):
    text: str


class Token(BaseModel):
    start: int
    end: int
    pos: str


class TagResponse(BaseModel):
    tokens: list[Token]


class HealthResponse(BaseModel):
    status: str
    resolver: str
    tagger: str


def create_app(config: AdapterConfig | None = None) -> FastAPI:
    cfg = (config or AdapterConfig()).validate()
    resolver = make_resolver(cfg)
    tagger = make_tagger(cfg)
    inference_lock = threading.Lock()
    app = FastAPI(title="coref-adapter")

    def _check_length(text: str) -> None:
        if len(text) > cfg.max_input_length:
            raise HTTPException(
                status_code=413,
                detail=f"input of {len(text)} code points exceeds limit {cfg.max_input_length}",
            )

    @app.post("/resolve", response_model=ResolveResponse)
    def serve_resolve(request: ResolveRequest) -> ResolveResponse:
        _check_length(request.text)
        try:
            with inference_lock:
                mentions, clusters = resolver.resolve(request.text)
        except Exception as exc:
            log.exception("resolver failure on chunk %d", request.chunk_id)
            raise HTTPException(status_code=500, detail=f"resolver failure: {exc}") from exc
        _check_spans(request.text, mentions)
        return ResolveResponse(
            mentions=[Mention(start=s, end=e) for s, e in mentions],
            clusters=clusters,
        )

    @app.post("/tag", response_model=TagResponse)
    def serve_tag(request: TagRequest) -> TagResponse:
        _check_length(request.text)
        try:
            with inference_lock:
                tokens = tagger.tag(request.text)
        except Exception as exc:
            log.exception("tagger failure")
            raise HTTPException(status_code=500, detail=f"tagger failure: {exc}") from exc
        _check_spans(request.text, [(s, e) for s, e, _ in tokens])
        return TagResponse(tokens=[Token(start=s, end=e, pos=p) for s, e, p in tokens])

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(status="ok", resolver=resolver.name, tagger=tagger.name)

    return app


def _check_spans(text: str, spans) -> None:
    for s, e in spans:
        if not (0 <= s < e <= len(text)):
            raise HTTPException(
                status_code=500, detail=f"backend produced invalid span ({s}, {e})"
            )
