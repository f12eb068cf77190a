import json
import logging
from typing import List

from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from pydantic import BaseModel

from ..modules.corpus import tokenize
from ..modules.zeroshot import mock_nli_score

logger = logging.getLogger(__name__)


class NliPair(BaseModel):
    premise: str
    hypothesis: str


class NliBatchRequest(BaseModel):
    model: str
    pairs: List[NliPair]


class NliStubService:
    """Reference /v1/nli server scoring pairs with the token-overlap rule.

    Failure injection knobs drive client conformance checks:
      fail_first   - answer the first N requests with HTTP 503
      drop_rows    - return that many fewer logit rows than pairs
      poison_row   - index of a row whose entailment is replaced by NaN
    """

    def __init__(self, fail_first: int = 0, drop_rows: int = 0, poison_row: int = -1):
        self.app = FastAPI(title="sectorzero NLI stub")
        self.fail_first = fail_first
        self.drop_rows = drop_rows
        self.poison_row = poison_row
        self.requests_seen = 0
        self.pairs_seen: List[NliPair] = []
        self.setup_routes()

    def setup_routes(self):
        """Setup API endpoints"""

        @self.app.post("/v1/nli")
        async def nli(request: NliBatchRequest):
            self.requests_seen += 1
            if self.requests_seen <= self.fail_first:
                logger.info(f"Injected failure for request {self.requests_seen}")
                raise HTTPException(status_code=503, detail="injected failure")
            if not request.pairs:
                raise HTTPException(status_code=400, detail="pairs cannot be empty")

            self.pairs_seen.extend(request.pairs)
            rows = [
                mock_nli_score(pair.premise, pair.hypothesis, tokenize(pair.hypothesis)).as_list()
                for pair in request.pairs
            ]
            if 0 <= self.poison_row < len(rows):
                rows[self.poison_row][2] = float("nan")
            if self.drop_rows:
                rows = rows[:max(len(rows) - self.drop_rows, 0)]
            # json.dumps writes NaN literally, which the client must reject
            return Response(content=json.dumps({"logits": rows}), media_type="application/json")

        @self.app.get("/health")
        async def health_check():
            """Health check endpoint"""
            return {"status": "healthy", "service": "nli_stub", "requests": self.requests_seen}


def create_app(**knobs) -> FastAPI:
    return NliStubService(**knobs).app
