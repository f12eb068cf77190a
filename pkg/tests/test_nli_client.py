import asyncio
import json

import httpx
import pytest

from sectorzero.errors import BackendUnavailable, ClassificationAborted, ProtocolError
from sectorzero.modules.synthetic import generate_synthetic_corpus
from sectorzero.modules.zeroshot import ZeroShotClassifier
from sectorzero.services.nli_client import NLI_PATH, RemoteBackend
from sectorzero.services.nli_stub import NliStubService

ENDPOINT = "http://nli.test"
PAIRS = [
    ("Drills oil and gas wells.", "This example is oil."),
    ("Runs a retail bank.", "This example is banking."),
    ("Makes chips.", "This example is oil."),
]


class SleepRecorder:
    def __init__(self):
        self.delays = []

    async def __call__(self, delay):
        self.delays.append(delay)


def stub_backend(service, sleep=None):
    return RemoteBackend(
        ENDPOINT, "valhalla/distilbart-mnli-12-3",
        transport=httpx.ASGITransport(app=service.app),
        sleep=sleep or SleepRecorder(),
    )


def scripted_backend(handler, sleep=None):
    return RemoteBackend(ENDPOINT, "m", transport=httpx.MockTransport(handler), sleep=sleep or SleepRecorder())


async def score_and_close(backend, pairs):
    async with backend:
        return await backend.remote_nli_score(pairs)


def test_logits_are_order_aligned():
    service = NliStubService()
    logits = asyncio.run(score_and_close(stub_backend(service), PAIRS))
    assert [l.entailment for l in logits] == [2.0, 0.0, 0.0]
    assert [l.contradiction for l in logits] == [1.0, 1.0, 1.0]
    assert [(p.premise, p.hypothesis) for p in service.pairs_seen] == PAIRS


def test_request_payload_shape():
    seen = []

    def handler(request):
        seen.append((request.url.path, json.loads(request.content)))
        return httpx.Response(200, json={"logits": [[0.1, 0.2, 0.3]]})

    asyncio.run(score_and_close(scripted_backend(handler), PAIRS[:1]))
    path, body = seen[0]
    assert path == NLI_PATH
    assert body == {"model": "m", "pairs": [{"premise": PAIRS[0][0], "hypothesis": PAIRS[0][1]}]}


def test_length_mismatch_is_protocol_error():
    with pytest.raises(ProtocolError):
        asyncio.run(score_and_close(stub_backend(NliStubService(drop_rows=1)), PAIRS))


def test_non_finite_logit_is_protocol_error():
    with pytest.raises(ProtocolError):
        asyncio.run(score_and_close(stub_backend(NliStubService(poison_row=1)), PAIRS))


@pytest.mark.parametrize("body", [
    b"not json",
    b'{"scores": []}',
    b'{"logits": [[1.0, 2.0]]}',
    b'{"logits": [["a", "b", "c"]]}',
    b'{"logits": [[1, 0, ' + b"9" * 400 + b']]}',
    b'{"logits": [[1, 0, 1e400]]}',
])
def test_malformed_bodies_are_protocol_errors(body):
    def handler(request):
        return httpx.Response(200, content=body)

    with pytest.raises(ProtocolError):
        asyncio.run(score_and_close(scripted_backend(handler), PAIRS[:1]))


def test_transient_failures_are_retried_with_backoff():
    service = NliStubService(fail_first=2)
    sleep = SleepRecorder()
    logits = asyncio.run(score_and_close(stub_backend(service, sleep), PAIRS))
    assert len(logits) == 3
    assert service.requests_seen == 3
    assert sleep.delays == [0.5, 1.0]


def test_server_down_after_three_attempts():
    service = NliStubService(fail_first=10)
    sleep = SleepRecorder()
    with pytest.raises(BackendUnavailable):
        asyncio.run(score_and_close(stub_backend(service, sleep), PAIRS))
    assert service.requests_seen == 3
    assert sleep.delays == [0.5, 1.0]


def test_connection_errors_are_retried():
    calls = []

    def handler(request):
        calls.append(request)
        raise httpx.ConnectError("connection refused", request=request)

    with pytest.raises(BackendUnavailable):
        asyncio.run(score_and_close(scripted_backend(handler), PAIRS))
    assert len(calls) == 3


def test_client_errors_are_not_retried():
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(400, json={"detail": "bad request"})

    sleep = SleepRecorder()
    with pytest.raises(BackendUnavailable):
        asyncio.run(score_and_close(scripted_backend(handler, sleep), PAIRS))
    assert len(calls) == 1
    assert sleep.delays == []


def test_empty_pairs_rejected():
    with pytest.raises(ValueError):
        asyncio.run(score_and_close(scripted_backend(lambda request: httpx.Response(200)), []))


def test_descriptor_identifies_endpoint_and_model():
    backend = RemoteBackend(ENDPOINT + "/", "facebook/bart-large-mnli")
    assert backend.descriptor.backend_id == ENDPOINT
    assert backend.descriptor.model_id == "facebook/bart-large-mnli"


def test_classifier_over_stub_server(enriched_labels):
    corpus = generate_synthetic_corpus(enriched_labels, per_class=2, seed=7)
    service = NliStubService()

    async def run():
        async with stub_backend(service) as backend:
            classifier = ZeroShotClassifier(enriched_labels, backend, batch_size=5)
            return classifier, await classifier.classify_corpus(corpus)

    classifier, predictions = asyncio.run(run())
    assert [classifier.predicted_name(p) for p in predictions] == [r.gold_sector for r in corpus.records]
    # 11 hypotheses per document in batches of 5, 5, 1
    assert service.requests_seen == 3 * len(corpus)


def test_stub_health():
    service = NliStubService()

    async def fetch_health():
        async with httpx.AsyncClient(transport=httpx.ASGITransport(app=service.app), base_url=ENDPOINT) as client:
            return await client.get("/health")

    response = asyncio.run(fetch_health())
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_oversized_logit_aborts_classification(enriched_labels):
    corpus = generate_synthetic_corpus(enriched_labels, per_class=1, seed=7)

    def handler(request):
        rows = len(json.loads(request.content)["pairs"])
        body = '{"logits": [' + ", ".join(["[1, 0, " + "9" * 400 + "]"] * rows) + "]}"
        return httpx.Response(200, content=body.encode())

    async def run():
        async with scripted_backend(handler) as backend:
            await ZeroShotClassifier(enriched_labels, backend).classify_corpus(corpus)

    with pytest.raises(ClassificationAborted) as excinfo:
        asyncio.run(run())
    assert isinstance(excinfo.value.cause, ProtocolError)
    assert excinfo.value.completed == 0
