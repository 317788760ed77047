"""HTTP surface: POST /embed for batches, GET /health for readiness.

The model loads once at startup; until it is ready both endpoints answer
503. Request handling is stateless over the read-only encoder, so
concurrent batches are safe.
"""

from __future__ import annotations

import logging
import os
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .encoders import DEFAULT_MODEL_ID, SentenceEncoder, load_encoder

logger = logging.getLogger(__name__)

DEFAULT_MAX_BATCH = 128


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(model_id: str | None = None, max_batch: int | None = None) -> FastAPI:
    model_id = model_id or os.environ.get("EMBED_MODEL_ID", DEFAULT_MODEL_ID)
    max_batch = max_batch or int(os.environ.get("EMBED_MAX_BATCH", DEFAULT_MAX_BATCH))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        logger.info("loading encoder %s", model_id)
        app.state.encoder = load_encoder(model_id)
        logger.info("encoder ready: dim=%d", app.state.encoder.dim)
        yield

    app = FastAPI(title="embed-service", lifespan=lifespan)
    app.state.encoder = None
    app.state.max_batch = max_batch

    def ready_encoder() -> SentenceEncoder:
        encoder = app.state.encoder
        if encoder is None:
            raise HTTPException(status_code=503, detail="model is still loading")
        return encoder

    @app.get("/health")
    def health():
        encoder = ready_encoder()
        return {"status": "ok", "model_id": encoder.model_id, "dim": encoder.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        encoder = ready_encoder()
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be non-empty")
        if len(request.texts) > app.state.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(request.texts)} exceeds limit {app.state.max_batch}",
            )
        for i, text in enumerate(request.texts):
            if not text.strip():
                raise HTTPException(status_code=400, detail=f"texts[{i}] is blank")
        vectors = encoder.encode(request.texts)
        return {
            "vectors": vectors.tolist(),
            "model_id": encoder.model_id,
            "dim": encoder.dim,
        }

    return app
