"""HTTP inference service: /v1/inpaint, /v1/health and the static mask-painting UI.

All endpoints are read-only with respect to the loaded checkpoint; a
bounded worker pool limits in-flight forwards. Request size caps are
enforced before any payload decoding.
"""

from __future__ import annotations

import asyncio
import binascii
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import imageio
from .inference import InferenceError, LoadedModel, inpaint_u8, load_model

logger = logging.getLogger(__name__)

__all__ = ["InpaintRequest", "InpaintResponse", "HealthResponse", "create_app"]

DEFAULT_MAX_REQUEST_BYTES = 16 * 1024 * 1024
DEFAULT_WORKERS = 2

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>wavepaint</title></head>
<body><h1>wavepaint inference service</h1>
<p>No static UI directory configured. API endpoints:</p>
<ul><li>GET /v1/health</li><li>POST /v1/inpaint</li></ul>
</body></html>"""


class InpaintRequest(BaseModel):
    image: str = Field(description="base64 PNG, RGB")
    mask: str = Field(description="base64 PNG, 8-bit single channel, 0=hole 255=known")
    model: str | None = None


class InpaintResponse(BaseModel):
    image: str
    timing_ms: float
    model: str


class HealthResponse(BaseModel):
    status: str
    model: str
    config: dict


def create_app(
    ckpt_path=None,
    static_dir=None,
    max_request_bytes: int = DEFAULT_MAX_REQUEST_BYTES,
    workers: int = DEFAULT_WORKERS,
) -> FastAPI:
    app = FastAPI(title="wavepaint", version="0.1.0")
    app.state.loaded: LoadedModel | None = None
    app.state.max_request_bytes = max_request_bytes
    app.state.executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="inpaint")

    if ckpt_path is not None:
        app.state.loaded = load_model(ckpt_path)
        logger.info("loaded model %s", app.state.loaded.model_id)

    @app.middleware("http")
    async def cap_body_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and length.isdigit() and int(length) > app.state.max_request_bytes:
            return JSONResponse({"detail": "request too large"}, status_code=413)
        return await call_next(request)

    @app.get("/v1/health")
    def health():
        lm = app.state.loaded
        if lm is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return HealthResponse(status="ok", model=lm.model_id, config=lm.summary())

    @app.post("/v1/inpaint", response_model=InpaintResponse)
    async def inpaint(req: InpaintRequest):
        lm = app.state.loaded
        if lm is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        # Size cap before any decode (base64 expands by 4/3).
        if len(req.image) + len(req.mask) > app.state.max_request_bytes:
            raise HTTPException(status_code=413, detail="request too large")
        try:
            image_bytes = imageio.b64_to_bytes(req.image)
            mask_bytes = imageio.b64_to_bytes(req.mask)
        except (binascii.Error, ValueError):
            raise HTTPException(status_code=400, detail="payload is not valid base64")
        try:
            image_u8 = imageio.decode_image_png_u8(image_bytes)
            mask_u8 = np.asarray(imageio.decode_mask_png(mask_bytes)[:, :, 0] * 255, dtype=np.uint8)
        except Exception:
            raise HTTPException(status_code=400, detail="payload is not a decodable PNG")
        if image_u8.shape[:2] != mask_u8.shape[:2]:
            raise HTTPException(
                status_code=400,
                detail=f"image dims {image_u8.shape[:2]} != mask dims {mask_u8.shape[:2]}",
            )

        loop = asyncio.get_running_loop()
        try:
            out_u8, elapsed = await loop.run_in_executor(
                app.state.executor, inpaint_u8, lm, image_u8, mask_u8
            )
        except InferenceError as e:
            raise HTTPException(status_code=400, detail=str(e))
        return InpaintResponse(
            image=imageio.bytes_to_b64(imageio.encode_image_png(out_u8)),
            timing_ms=elapsed,
            model=lm.model_id,
        )

    resolved_static = Path(static_dir) if static_dir else None
    if resolved_static and resolved_static.is_dir():
        app.mount("/", StaticFiles(directory=resolved_static, html=True), name="ui")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_PAGE

    return app


def configure_logging():
    """Honor WAVEPAINT_LOG in {error, info, debug}; default error."""
    level = os.environ.get("WAVEPAINT_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR))
