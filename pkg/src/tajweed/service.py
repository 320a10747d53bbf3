"""HTTP scoring service.

POST /predict takes raw linear-PCM WAV bytes and returns the three rule
probabilities and pass/fail verdicts; /health reports readiness and the
loaded model id; /rules publishes the rule names and the output ordering
contract. The service adds no math of its own: a prediction is exactly
what a local forward pass on the same checkpoint produces.
"""

from __future__ import annotations

import hashlib
import logging
import time
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from tajweed.audio import WavFormatError, read_wav_bytes
from tajweed.checkpoint import CheckpointError, load_checkpoint
from tajweed.config import DspConfig
from tajweed.dsp import preprocess_waveform
from tajweed.rules import RULES
from tajweed.train import predict_batch

log = logging.getLogger(__name__)

MIN_DURATION_S = 0.25
MAX_DURATION_S = 30.0
VERDICT_THRESHOLD = 0.5
_WAV_CONTENT_TYPES = {"audio/wav", "audio/x-wav", "audio/wave", "application/octet-stream"}


class ModelHolder:
    """Checkpoint state shared by the request handlers, loaded once."""

    def __init__(self, checkpoint_path: Path | str | None):
        self.model = None
        self.model_id = ""
        self.dsp_config = DspConfig()
        self.started_at = time.monotonic()
        if checkpoint_path is None:
            log.warning("no checkpoint configured; serving degraded")
            return
        try:
            loaded = load_checkpoint(checkpoint_path)
        except (CheckpointError, OSError) as exc:
            log.error("could not load checkpoint %s: %s", checkpoint_path, exc)
            return
        loaded.model.eval()
        self.model = loaded.model
        self.model_id = loaded.checksum
        dsp_flat = loaded.extras.get("dsp")
        if dsp_flat:
            self.dsp_config = DspConfig(**dsp_flat)

    @property
    def ready(self) -> bool:
        return self.model is not None

    def uptime_s(self) -> float:
        return time.monotonic() - self.started_at


def create_app(
    checkpoint_path: Path | str | None = None,
    allowed_origin: str | None = None,
) -> FastAPI:
    app = FastAPI(title="tajweed scoring service")
    holder = ModelHolder(checkpoint_path)
    app.state.holder = holder

    if allowed_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[allowed_origin],
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.get("/health")
    def health() -> Response:
        body = {
            "status": "ready" if holder.ready else "degraded",
            "model_id": holder.model_id,
            "uptime_s": round(holder.uptime_s(), 3),
        }
        return JSONResponse(body, status_code=200 if holder.ready else 503)

    @app.get("/rules")
    def rules() -> dict:
        return {
            "ordering": "response arrays index rules in this fixed order",
            "rules": [
                {"index": i, "key": r.key, "name": r.name, "description": r.description}
                for i, r in enumerate(RULES)
            ],
        }

    @app.post("/predict")
    async def predict(request: Request) -> Response:
        if not holder.ready:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        content_type = (request.headers.get("content-type") or "").split(";")[0].strip().lower()
        if content_type not in _WAV_CONTENT_TYPES:
            return JSONResponse(
                {"error": f"unsupported content type {content_type!r}; send audio/wav"},
                status_code=415,
            )
        body = await request.body()
        try:
            waveform = read_wav_bytes(body)
        except WavFormatError as exc:
            return JSONResponse({"error": f"undecodable audio: {exc}"}, status_code=400)
        if waveform.duration_s < MIN_DURATION_S:
            return JSONResponse(
                {"error": f"too short: {waveform.duration_s:.3f} s < {MIN_DURATION_S} s"},
                status_code=400,
            )
        if waveform.duration_s > MAX_DURATION_S:
            return JSONResponse(
                {"error": f"too long: {waveform.duration_s:.3f} s > {MAX_DURATION_S} s"},
                status_code=400,
            )

        tensor = preprocess_waveform(waveform, holder.dsp_config).data
        batch = torch.from_numpy(np.expand_dims(tensor, 0))
        verdicts, probabilities = predict_batch(holder.model, batch, VERDICT_THRESHOLD)
        return JSONResponse(
            {
                "clip_token": hashlib.sha256(body).hexdigest()[:16],
                "probabilities": [float(p) for p in probabilities[0]],
                "verdicts": [bool(v) for v in verdicts[0]],
                "model_id": holder.model_id,
                "dsp_config_hash": holder.dsp_config.cache_key(),
            }
        )

    return app


def run_service(
    checkpoint_path: Path | str,
    host: str = "127.0.0.1",
    port: int = 8000,
    allowed_origin: str | None = None,
) -> None:
    import uvicorn

    app = create_app(checkpoint_path, allowed_origin=allowed_origin)
    uvicorn.run(app, host=host, port=port)
