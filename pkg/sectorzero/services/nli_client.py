import asyncio
import logging
import math
from typing import Awaitable, Callable, List, Optional, Sequence, Tuple

import httpx

from ..errors import BackendUnavailable, ProtocolError
from ..modules.zeroshot import DEFAULT_TEMPLATE, BackendDescriptor, NliLogits, NliRequest

logger = logging.getLogger(__name__)

NLI_PATH = "/v1/nli"
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class RemoteBackend:
    """Client for an MNLI model server speaking the /v1/nli protocol.

    Request:  {"model": str, "pairs": [{"premise": str, "hypothesis": str}, ...]}
    Response: {"logits": [[contradiction, neutral, entailment], ...]}, order-aligned
    """

    concurrent_safe = True

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        template: str = DEFAULT_TEMPLATE,
        timeout: float = 30.0,
        attempts: int = 3,
        backoff: float = 0.5,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self.attempts = attempts
        self.backoff = backoff
        self.descriptor = BackendDescriptor(backend_id=self.endpoint, model_id=model_id, template=template)
        self._transport = transport
        self._sleep = sleep
        self._client: Optional[httpx.AsyncClient] = None

    def _get_client(self) -> httpx.AsyncClient:
        if self._client is None:
            self._client = httpx.AsyncClient(
                base_url=self.endpoint,
                timeout=httpx.Timeout(self.timeout),
                transport=self._transport,
            )
        return self._client

    async def aclose(self):
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc_info):
        await self.aclose()

    async def score(self, requests: Sequence[NliRequest]) -> List[NliLogits]:
        return await self.remote_nli_score([(r.premise, r.hypothesis) for r in requests])

    async def remote_nli_score(self, pairs: Sequence[Tuple[str, str]]) -> List[NliLogits]:
        if not pairs:
            raise ValueError("remote_nli_score needs at least one pair")
        payload = {
            "model": self.model_id,
            "pairs": [{"premise": premise, "hypothesis": hypothesis} for premise, hypothesis in pairs],
        }
        response = await self._post_with_retry(payload)
        return self._parse_logits(response, len(pairs))

    async def _post_with_retry(self, payload: dict) -> httpx.Response:
        client = self._get_client()
        delay = self.backoff
        last_error = "no attempt made"
        for attempt in range(1, self.attempts + 1):
            try:
                response = await client.post(NLI_PATH, json=payload)
                if response.status_code == 200:
                    return response
                last_error = f"HTTP {response.status_code}"
                if response.status_code not in RETRYABLE_STATUS:
                    break
            except httpx.TransportError as e:
                last_error = f"{type(e).__name__}: {e}"

            if attempt < self.attempts:
                logger.warning(
                    f"NLI request to {self.endpoint} failed ({last_error}), "
                    f"retrying in {delay}s (attempt {attempt}/{self.attempts})"
                )
                await self._sleep(delay)
                delay *= 2

        logger.error(f"NLI backend {self.endpoint} unavailable: {last_error}")
        raise BackendUnavailable(f"{self.endpoint}: {last_error}")

    @staticmethod
    def _parse_logits(response: httpx.Response, expected: int) -> List[NliLogits]:
        try:
            body = response.json()
        except ValueError as e:
            raise ProtocolError(f"response is not JSON: {e}") from e
        rows = body.get("logits") if isinstance(body, dict) else None
        if not isinstance(rows, list):
            raise ProtocolError("response has no 'logits' array")
        if len(rows) != expected:
            raise ProtocolError(f"expected {expected} logit rows, got {len(rows)}")

        logits = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != 3:
                raise ProtocolError(f"logit row {i} is not a [c, n, e] triple")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
                raise ProtocolError(f"logit row {i} holds non-numeric values")
            try:
                values = [float(v) for v in row]
            except (OverflowError, TypeError, ValueError) as e:
                raise ProtocolError(f"logit row {i} does not fit a float: {e}") from e
            if not all(math.isfinite(v) for v in values):
                raise ProtocolError(f"logit row {i} holds non-finite values: {values}")
            logits.append(NliLogits.from_list(values))
        return logits
