"""HTTP scoring service.

Wire protocol, shared with any client that can POST JSON:

    POST /v1/score   {"id": "...", "sentences": ["...", ...]}
      200 {"id": "<same>", "scores": [float, ...], "tokens": [int, ...]}
      400 {"error": "..."}   malformed request (bad shape, blank sentences,
                              sentence beyond the model's position limit)
      503 {"error": "..."}   model not loaded yet, or scoring failed

Every 200 reply carries an ``X-Scoring-Mode`` header naming the algorithm
(exact per-position masking, or the single-pass approximation).  ``tokens``
holds the model's own content-token count per sentence — subwords, not
whitespace words.
"""

from __future__ import annotations

import logging
import threading
from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .model import ServiceConfig, load_model
from .scoring import MaskedLMScorer, SentenceTooLong

logger = logging.getLogger(__name__)


class ScorePayload(BaseModel):
    id: str = Field(min_length=1)
    sentences: List[str] = Field(min_length=1)


class ModelHolder:
    """Owns the scorer; ``load`` may run in a background thread."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._scorer: Optional[MaskedLMScorer] = None
        self._error: Optional[str] = None
        self._lock = threading.Lock()

    @property
    def scorer(self) -> Optional[MaskedLMScorer]:
        return self._scorer

    @property
    def ready(self) -> bool:
        return self._scorer is not None

    @property
    def error(self) -> Optional[str]:
        return self._error

    def load(self) -> None:
        with self._lock:
            if self._scorer is not None:
                return
            try:
                tokenizer, model = load_model(self.config.model, self.config.device)
                self._scorer = MaskedLMScorer(
                    tokenizer,
                    model,
                    device=self.config.device,
                    max_batch=self.config.max_batch,
                    exact=self.config.exact,
                )
                logger.info("model %s loaded", self.config.model)
            except Exception as exc:  # surfaced as 503 with the reason
                self._error = f"model failed to load: {exc}"
                logger.exception("model %s failed to load", self.config.model)

    def load_in_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.load, name="mlmscore-model-load", daemon=True)
        thread.start()
        return thread


def create_app(holder: ModelHolder) -> FastAPI:
    app = FastAPI(title="mlmscore", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    @app.post("/v1/score")
    def score(payload: ScorePayload):
        scorer = holder.scorer
        if scorer is None:
            message = holder.error or "model not ready"
            return JSONResponse(status_code=503, content={"error": message})
        if any(not s or not s.strip() for s in payload.sentences):
            return JSONResponse(status_code=400, content={"error": "sentences must be non-blank"})
        try:
            results = scorer.score_many(payload.sentences)
        except SentenceTooLong as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except Exception as exc:
            logger.exception("scoring failed")
            return JSONResponse(status_code=503, content={"error": f"scoring failed: {exc}"})
        return JSONResponse(
            content={
                "id": payload.id,
                "scores": [value for value, _ in results],
                "tokens": [count for _, count in results],
            },
            headers={"X-Scoring-Mode": scorer.mode},
        )

    @app.get("/v1/healthz")
    def healthz():
        return {
            "status": "ok" if holder.ready else "loading",
            "ready": holder.ready,
            "model": holder.config.model,
            "mode": holder.scorer.mode if holder.ready else None,
            "error": holder.error,
        }

    return app
