"""HTTP surface of the adapter: /v1/generate, /v1/embed, /health.

Generate speaks the byte-pinned generator protocol. Protocol violations are
answered with structured error frames (never a crash); unexpected internal
failures become 500 frames so a driving pipeline can distinguish retryable
trouble from bad requests.
"""
from __future__ import annotations

import logging

from fastapi import FastAPI, Request, Response
from pydantic import BaseModel, Field

from . import __version__
from .embedding import EncoderEmbedder
from .model import ScaffoldDecoder
from .wire import PROTOCOL_VERSION, WireError, error_frame, parse_request, response_to_bytes

logger = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    protocol_version: int = Field(default=PROTOCOL_VERSION)
    texts: list[str]


class EmbedResponse(BaseModel):
    protocol_version: int = PROTOCOL_VERSION
    vectors: list[list[float]]
    truncated: list[int] = []


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
    protocol_version: int
    model: str
    device: str


def create_app(decoder: ScaffoldDecoder) -> FastAPI:
    app = FastAPI(title="argex-adapter", version=__version__)
    embedder = EncoderEmbedder(decoder.backend)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            version=__version__,
            protocol_version=PROTOCOL_VERSION,
            model=decoder.model_name,
            device=decoder.config.device,
        )

    @app.post("/v1/generate")
    async def generate(request: Request) -> Response:
        body = await request.body()
        try:
            wire_request = parse_request(body)
            wire_response = decoder.generate(wire_request)
        except WireError as exc:
            logger.warning("protocol violation: %s", exc)
            return Response(
                content=error_frame(str(exc)), status_code=400, media_type="application/json"
            )
        except Exception as exc:  # keep the serving loop alive no matter what
            logger.exception("generate failed")
            return Response(
                content=error_frame(f"internal error: {exc}"),
                status_code=500,
                media_type="application/json",
            )
        return Response(content=response_to_bytes(wire_response), media_type="application/json")

    @app.post("/v1/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        if request.protocol_version != PROTOCOL_VERSION:
            return Response(  # type: ignore[return-value]
                content=error_frame("protocol version mismatch"),
                status_code=400,
                media_type="application/json",
            )
        vectors, truncated = embedder.embed_batch(request.texts)
        if truncated:
            logger.warning("truncated %d over-length text(s)", len(truncated))
        return EmbedResponse(vectors=vectors, truncated=truncated)

    return app
