"""HTTP service over a loaded graph + scorer.

Endpoints:
    POST /v1/score   - the scoring wire protocol, backed by this app's scorer
    POST /v1/answer  - run the multi-hop search for one question
    POST /v1/link    - entity linking only
    GET  /v1/healthz - liveness + graph stats

The /v1/score endpoint speaks the exact wire protocol the RemoteScorer
client expects: {"id", "sentences"} in, {"id", "scores", "tokens"} out,
errors as {"error": ...} with status 400 (bad request) or 503 (scoring
backend unavailable).
"""

from __future__ import annotations

from typing import List, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .kg import KnowledgeGraph
from .linking import EntityLinker, NoLinkableEntitiesError, extract_entities
from .scoring import Scorer, ScoreRequest, ScorerError, score
from .search import SearchConfig, answer_record, search


class ScoreBody(BaseModel):
    id: str
    sentences: List[str]


class AnswerBody(BaseModel):
    question: str
    top: Optional[int] = 1
    max_hops: Optional[int] = None
    beam_width: Optional[int] = None
    direction: Optional[str] = None


class LinkBody(BaseModel):
    question: str


def create_app(
    graph: KnowledgeGraph,
    scorer: Scorer,
    defaults: Optional[SearchConfig] = None,
) -> FastAPI:
    defaults = defaults or SearchConfig()
    app = FastAPI(title="pathkeep")
    linker = EntityLinker(graph)

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/v1/score")
    def score_endpoint(body: ScoreBody):
        try:
            request = ScoreRequest(tuple(body.sentences), batch_id=body.id)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        try:
            results = score(scorer, request)
        except (ScorerError, ValueError) as exc:
            return JSONResponse(status_code=503, content={"error": str(exc)})
        return {
            "id": body.id,
            "scores": [r.value for r in results],
            "tokens": [r.tokens_scored for r in results],
        }

    @app.post("/v1/answer")
    def answer_endpoint(body: AnswerBody):
        try:
            config = SearchConfig(
                max_hops=body.max_hops or defaults.max_hops,
                beam_width=body.beam_width or defaults.beam_width,
                direction=body.direction or defaults.direction,
                answers_returned=body.top or defaults.answers_returned,
            )
            answers = search(body.question, graph, scorer, config, linker=linker)
        except (NoLinkableEntitiesError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        except ScorerError as exc:
            return JSONResponse(status_code=503, content={"error": str(exc)})
        return answer_record(body.question, answers, config)

    @app.post("/v1/link")
    def link_endpoint(body: LinkBody):
        try:
            result = extract_entities(body.question, graph, linker=linker)
        except (NoLinkableEntitiesError, ValueError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return result.to_record(graph)

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", **graph.stats()}

    return app
