"""FastAPI application exposing the /v1/logprobs wire protocol.

Status codes follow the protocol contract: 400 for a malformed body, 422
for empty text, 503 until the model has loaded. Model invocation is
serialized behind a lock; responses are deterministic for a fixed backend.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import Backend, backend_from_spec


@dataclass(frozen=True)
class ServerConfig:
    model: str = "countlm:train.jsonl"
    device: str = "cpu"
    max_batch: int = 1
    port: int = 8100

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")


class LogprobsRequest(BaseModel):
    text: str
    max_tokens: int = Field(ge=1)


class LogprobsResponse(BaseModel):
    tokens: list[str]
    logprobs: list[float]


def create_app(
    config: ServerConfig, backend_factory: Callable[[], Backend] | None = None
) -> FastAPI:
    """Build the service; the backend loads on startup, not at import time."""
    factory = backend_factory or (lambda: backend_from_spec(config.model, config.device))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.backend = factory()
        yield
        app.state.backend = None

    app = FastAPI(title="score-server", lifespan=lifespan)
    app.state.backend = None
    app.state.config = config
    app.state.lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request, exc):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.post("/v1/logprobs", response_model=LogprobsResponse)
    def logprobs(req: LogprobsRequest) -> LogprobsResponse:
        backend = app.state.backend
        if backend is None:
            raise HTTPException(status_code=503, detail="model is still loading")
        if not req.text:
            raise HTTPException(status_code=422, detail="text must be non-empty")
        with app.state.lock:
            tokens, scores = backend.score(req.text, req.max_tokens)
        return LogprobsResponse(tokens=tokens, logprobs=scores)

    @app.get("/v1/health")
    def health() -> dict:
        backend = app.state.backend
        return {
            "status": "ok",
            "model": backend.model_id if backend is not None else config.model,
            "ready": backend is not None,
        }

    return app
