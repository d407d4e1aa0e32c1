"""HTTP surface of the embedding service.

  POST /v1/embed   {"modality": "text"|"image", "items": [{"key", "payload"}], "model"?}
                   -> {"model_id", "dim", "vectors": [{"key", "vec"}]}
                   one vector per item, in request order; text payloads are raw
                   strings, image payloads base64-encoded bytes
  GET  /health     -> {"status", "model_id", "dim", "models"}

Status codes: 400 malformed request, 413 oversize batch (> 64 items),
422 undecodable image, 503 while models are loading or failed to load.

The API is stateless; identical payloads always produce identical vectors
(encoders run in eval mode with gradients disabled).
"""
from __future__ import annotations

import base64
import binascii
import io
import threading
from contextlib import asynccontextmanager
from typing import Callable, Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, Field

from .backends import backend_from_env

MAX_BATCH = 64


class EmbedItem(BaseModel):
    key: str
    payload: str


class EmbedRequest(BaseModel):
    modality: Literal["text", "image"]
    items: list[EmbedItem] = Field(min_length=1)
    model: str | None = None


class EmbedVector(BaseModel):
    key: str
    vec: list[float]


class EmbedResponse(BaseModel):
    model_id: str
    dim: int
    vectors: list[EmbedVector]


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(backend=None, backend_factory: Callable[[], object] | None = None) -> FastAPI:
    """Build the service app.

    With ``backend`` given (tests), the service is ready immediately. Otherwise
    the factory (default: real checkpoints from env config) runs in a loader
    thread at startup and the service answers 503 until it finishes.
    """

    state: dict = {"backend": backend, "error": None, "loading": backend is None}

    def load() -> None:
        factory = backend_factory or backend_from_env
        try:
            state["backend"] = factory()
        except Exception as exc:  # surfaced via /health and 503s
            state["error"] = f"{type(exc).__name__}: {exc}"
        finally:
            state["loading"] = False

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if state["backend"] is None:
            threading.Thread(target=load, daemon=True).start()
        else:
            state["loading"] = False
        yield

    app = FastAPI(title="embedder-service", version="0.1.0", lifespan=lifespan)

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request: {exc.errors()[:3]}")

    @app.get("/health")
    def health():
        backend = state["backend"]
        if backend is None:
            status = "loading" if state["loading"] else "error"
            detail = state["error"] or "models are loading"
            return _error(503, f"{status}: {detail}")
        return {
            "status": "ok",
            "model_id": backend.text_model_id,
            "dim": backend.text_dim,
            "models": {
                "text": {"model_id": backend.text_model_id, "dim": backend.text_dim},
                "image": {"model_id": backend.image_model_id, "dim": backend.image_dim},
            },
        }

    @app.post("/v1/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        backend = state["backend"]
        if backend is None:
            return _error(503, state["error"] or "models are loading")
        if len(request.items) > MAX_BATCH:
            return _error(413, f"batch of {len(request.items)} exceeds the {MAX_BATCH}-item limit")

        if request.modality == "text":
            model_id, dim = backend.text_model_id, backend.text_dim
            if request.model is not None and request.model != model_id:
                return _error(400, f"model {request.model!r} is not served (text model: {model_id})")
            matrix = backend.encode_text([item.payload for item in request.items])
        else:
            model_id, dim = backend.image_model_id, backend.image_dim
            if request.model is not None and request.model != model_id:
                return _error(400, f"model {request.model!r} is not served (image model: {model_id})")
            images = []
            for item in request.items:
                try:
                    raw = base64.b64decode(item.payload, validate=True)
                    image = Image.open(io.BytesIO(raw))
                    image.load()
                    images.append(image.convert("RGB"))
                except (binascii.Error, ValueError, OSError, UnidentifiedImageError) as exc:
                    return _error(422, f"undecodable image for key {item.key!r}: {exc}")
            matrix = backend.encode_images(images)

        vectors = [
            EmbedVector(key=item.key, vec=[float(x) for x in row])
            for item, row in zip(request.items, matrix)
        ]
        return EmbedResponse(model_id=model_id, dim=dim, vectors=vectors)

    return app
