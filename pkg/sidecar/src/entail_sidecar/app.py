"""HTTP service exposing the scorer over the entail wire protocol.

POST /score  {"pairs": [{"premise": ..., "hypothesis": ...}, ...]}
         ->  {"scores": [{"entailment": f, "not_entailment": f}, ...]}
POST /embed  {"texts": [...]} -> {"embeddings": [[...], ...]}
GET  /health -> {"status": "ok", "model": ...}

Responses are index-aligned with requests. Bad JSON or a payload that
does not fit the schema is a 400 naming the reason; a batch over the
configured limit is a 413.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .scoring import DEFAULT_MAX_LENGTH, EntailmentScorer

DEFAULT_MAX_BATCH = 256


class PairIn(BaseModel):
    premise: str
    hypothesis: str


class ScoreRequest(BaseModel):
    pairs: list[PairIn]


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(
    scorer: EntailmentScorer | None = None,
    model_id: str | None = None,
    max_length: int = DEFAULT_MAX_LENGTH,
    max_batch: int = DEFAULT_MAX_BATCH,
) -> FastAPI:
    """Build the service around an existing scorer or a loadable model id."""
    if scorer is None:
        if model_id is None:
            raise ValueError("need a scorer or a model_id")
        scorer = EntailmentScorer(model_id, max_length=max_length)

    app = FastAPI(title="entail-sidecar")

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def check_batch(n: int) -> None:
        if n > max_batch:
            raise HTTPException(
                status_code=413, detail=f"batch of {n} exceeds limit {max_batch}"
            )

    @app.post("/score")
    def score(req: ScoreRequest):
        check_batch(len(req.pairs))
        results = scorer.score_pairs(
            [p.premise for p in req.pairs], [p.hypothesis for p in req.pairs]
        )
        return {
            "scores": [
                {"entailment": e, "not_entailment": m} for e, m in results
            ]
        }

    @app.post("/embed")
    def embed(req: EmbedRequest):
        check_batch(len(req.texts))
        return {"embeddings": scorer.embed_texts(req.texts)}

    @app.get("/health")
    def health():
        return {"status": "ok", "model": scorer.model_id}

    return app
