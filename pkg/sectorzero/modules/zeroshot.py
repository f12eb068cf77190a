"""
Zero-shot classification by NLI entailment.

Each label becomes a hypothesis ("This example is {display_name}."), every
(premise, hypothesis) pair is scored by an entailment backend, and the
per-label logits are normalized into a Prediction.
"""
import asyncio
import json
import logging
import math
import re
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.special import expit, softmax

from ..errors import BadTemplate, ClassificationAborted, EmptyLabelSet, SectorZeroError
from .corpus import CompanyRecord, Corpus, tokenize
from .taxonomy import ClassLabel, LabelSet

if TYPE_CHECKING:
    from ..services.score_cache import ScoreCache

logger = logging.getLogger(__name__)

DEFAULT_TEMPLATE = "This example is {}."
_MULTI_LABEL_FLOOR = np.nextafter(0.0, 1.0)
_MULTI_LABEL_CEIL = np.nextafter(1.0, 0.0)
DEFAULT_TRUNCATION_CHARS = 1200
DEFAULT_BATCH_SIZE = 16
PLACEHOLDER = "{}"

_WHITESPACE_RE = re.compile(r"\s")


class ScoringMode(str, Enum):
    SINGLE_LABEL = "single"
    MULTI_LABEL = "multi"


class NliLogits(BaseModel):
    model_config = ConfigDict(frozen=True)

    contradiction: float
    neutral: float
    entailment: float

    @field_validator("contradiction", "neutral", "entailment")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"logit {value} is not finite")
        return value

    def as_list(self) -> List[float]:
        return [self.contradiction, self.neutral, self.entailment]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "NliLogits":
        contradiction, neutral, entailment = values
        return cls(contradiction=contradiction, neutral=neutral, entailment=entailment)


class Prediction(BaseModel):
    model_config = ConfigDict(frozen=True)

    doc_id: str
    scores: Tuple[float, ...]
    predicted_index: int


class BackendDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    backend_id: str
    model_id: str
    template: str

    @field_validator("backend_id", "model_id", "template")
    @classmethod
    def _non_empty(cls, value: str) -> str:
        if not value:
            raise ValueError("backend descriptor fields must be non-empty")
        return value


class NliRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    premise: str
    hypothesis: str
    label: ClassLabel


class NliBackend(Protocol):
    """Anything that scores (premise, hypothesis) pairs.

    Backends that cannot take concurrent calls set `concurrent_safe = False`
    and the classifier serializes calls to them.
    """

    descriptor: BackendDescriptor
    concurrent_safe: bool

    async def score(self, requests: Sequence[NliRequest]) -> List[NliLogits]:
        ...


def build_hypothesis(label: ClassLabel, template: str = DEFAULT_TEMPLATE) -> str:
    count = template.count(PLACEHOLDER)
    if count != 1:
        raise BadTemplate(template, count)
    return template.replace(PLACEHOLDER, label.display_name)


def truncate_premise(text: str, limit: int = DEFAULT_TRUNCATION_CHARS) -> str:
    """Keep at most `limit` characters, cutting back to the last whitespace"""
    if len(text) <= limit:
        return text
    window = text[:limit]
    if _WHITESPACE_RE.match(text[limit]):
        return window.rstrip()
    cut = max((m.start() for m in _WHITESPACE_RE.finditer(window)), default=-1)
    if cut <= 0:
        return window
    return window[:cut].rstrip()


def mock_nli_score(premise: str, hypothesis: str, label_tokens: Sequence[str]) -> NliLogits:
    """Deterministic stand-in for an MNLI model: entailment grows with shared tokens"""
    overlap = len(set(label_tokens) & set(tokenize(premise)))
    return NliLogits(contradiction=1.0, neutral=0.0, entailment=2.0 * overlap)


class MockBackend:
    concurrent_safe = True

    def __init__(self, template: str = DEFAULT_TEMPLATE, model_id: str = "token-overlap"):
        self.descriptor = BackendDescriptor(backend_id="mock", model_id=model_id, template=template)
        self.calls = 0

    async def score(self, requests: Sequence[NliRequest]) -> List[NliLogits]:
        self.calls += 1
        return [
            mock_nli_score(request.premise, request.hypothesis, tokenize(request.label.display_name))
            for request in requests
        ]


def normalize_scores(logits: Sequence[NliLogits], mode: ScoringMode) -> np.ndarray:
    if mode == ScoringMode.SINGLE_LABEL:
        return softmax(np.array([l.entailment for l in logits], dtype=float))
    # exp(e) / (exp(e) + exp(c)) per label, neutral ignored; kept strictly inside (0, 1)
    probs = expit(np.array([l.entailment - l.contradiction for l in logits], dtype=float))
    return np.clip(probs, _MULTI_LABEL_FLOOR, _MULTI_LABEL_CEIL)


class ScoringStats:
    """Counters reported in the run manifest"""

    def __init__(self):
        self.records = 0
        self.completed = 0
        self.cache_hits = 0
        self.backend_calls = 0
        self.pairs_scored = 0

    def as_dict(self) -> Dict[str, int]:
        return {
            "records": self.records,
            "completed": self.completed,
            "cache_hits": self.cache_hits,
            "backend_calls": self.backend_calls,
            "pairs_scored": self.pairs_scored,
        }


class ZeroShotClassifier:
    def __init__(
        self,
        labels: LabelSet,
        backend: NliBackend,
        mode: ScoringMode = ScoringMode.SINGLE_LABEL,
        template: str = DEFAULT_TEMPLATE,
        truncation_chars: int = DEFAULT_TRUNCATION_CHARS,
        batch_size: int = DEFAULT_BATCH_SIZE,
        parallelism: int = 1,
        cache: Optional["ScoreCache"] = None,
    ):
        if len(labels) == 0:
            raise EmptyLabelSet()
        self.labels = labels
        self.backend = backend
        self.mode = ScoringMode(mode)
        self.template = template
        self.truncation_chars = truncation_chars
        self.batch_size = batch_size
        self.parallelism = parallelism
        self.cache = cache
        self.stats = ScoringStats()
        self.hypotheses = [build_hypothesis(label, template) for label in labels.labels]
        self._backend_lock = None if getattr(backend, "concurrent_safe", False) else asyncio.Lock()

    async def _call_backend(self, requests: List[NliRequest]) -> List[NliLogits]:
        self.stats.backend_calls += 1
        self.stats.pairs_scored += len(requests)
        logger.debug(f"Scoring batch of {len(requests)} pairs with {self.backend.descriptor.backend_id}")
        if self._backend_lock is None:
            return await self.backend.score(requests)
        async with self._backend_lock:
            return await self.backend.score(requests)

    async def _score_pairs(self, premise: str) -> List[NliLogits]:
        descriptor = self.backend.descriptor
        results: List[Optional[NliLogits]] = [None] * len(self.hypotheses)
        pending = []
        for i, hypothesis in enumerate(self.hypotheses):
            if self.cache is not None:
                cached = self.cache.get(self.cache.key(descriptor, premise, hypothesis))
                if cached is not None:
                    results[i] = cached
                    self.stats.cache_hits += 1
                    continue
            pending.append(i)

        for start in range(0, len(pending), self.batch_size):
            chunk = pending[start:start + self.batch_size]
            requests = [
                NliRequest(premise=premise, hypothesis=self.hypotheses[i], label=self.labels.labels[i])
                for i in chunk
            ]
            logits = await self._call_backend(requests)
            for i, value in zip(chunk, logits):
                results[i] = value
                if self.cache is not None:
                    await self.cache.put(self.cache.key(descriptor, premise, self.hypotheses[i]), value)
        return results

    async def classify_document(self, record: CompanyRecord) -> Prediction:
        premise = truncate_premise(record.description, self.truncation_chars)
        logits = await self._score_pairs(premise)
        scores = normalize_scores(logits, self.mode)
        return Prediction(
            doc_id=record.id,
            scores=tuple(float(s) for s in scores),
            predicted_index=int(np.argmax(scores)),
        )

    async def classify_corpus(self, corpus: Corpus) -> List[Prediction]:
        """One prediction per record, in corpus order whatever the parallelism"""
        self.stats.records += len(corpus)
        semaphore = asyncio.Semaphore(self.parallelism)

        async def worker(record: CompanyRecord) -> Prediction:
            async with semaphore:
                prediction = await self.classify_document(record)
                self.stats.completed += 1
                return prediction

        tasks = [asyncio.create_task(worker(record)) for record in corpus.records]
        try:
            predictions = list(await asyncio.gather(*tasks))
        except SectorZeroError as e:
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)
            logger.error(f"Classification aborted after {self.stats.completed}/{len(corpus)} records: {e}")
            raise ClassificationAborted(self.stats.completed, len(corpus), e) from e

        logger.info(
            f"Classified {len(predictions)} records "
            f"({self.stats.cache_hits} cache hits, {self.stats.backend_calls} backend calls)"
        )
        return predictions

    def predicted_name(self, prediction: Prediction) -> str:
        return self.labels.labels[prediction.predicted_index].gics_name


def prediction_to_json(prediction: Prediction, labels: LabelSet) -> Dict:
    return {
        "id": prediction.doc_id,
        "predicted": labels.labels[prediction.predicted_index].gics_name,
        "scores": {name: score for name, score in zip(labels.display_names, prediction.scores)},
    }


def dump_predictions(predictions: Sequence[Prediction], labels: LabelSet) -> str:
    return "".join(
        json.dumps(prediction_to_json(p, labels), ensure_ascii=False) + "\n" for p in predictions
    )


def load_predictions(path: Union[str, Path], labels: LabelSet) -> List[Prediction]:
    """Read a predictions JSONL file back against the label set it was written with"""
    predictions = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            scores = tuple(float(obj["scores"][name]) for name in labels.display_names)
            predictions.append(Prediction(
                doc_id=str(obj["id"]),
                scores=scores,
                predicted_index=labels.index_of(obj["predicted"]),
            ))
    return predictions
