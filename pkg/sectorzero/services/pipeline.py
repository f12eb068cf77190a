import asyncio
import logging
import os
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .. import __version__
from ..config.settings import RunConfig
from ..errors import ClassificationAborted, ConfigError, SectorZeroError
from ..modules.corpus import Corpus, ingest_corpus
from ..modules.evaluation import (
    ConfusionMatrix,
    EvaluationReport,
    ReportFormat,
    evaluate,
    render_heatmap,
    render_report,
)
from ..modules.taxonomy import LabelSet, resolve_label_set
from ..modules.zeroshot import MockBackend, Prediction, ZeroShotClassifier, dump_predictions, load_predictions
from .nli_client import RemoteBackend
from .score_cache import ScoreCache

logger = logging.getLogger(__name__)

PREDICTIONS_FILE = "predictions.jsonl"
REPORT_FILES = {
    ReportFormat.TEXT: "report.txt",
    ReportFormat.CSV: "report.csv",
    ReportFormat.JSON: "report.json",
}
HEATMAP_FILE = "confusion.svg"
MANIFEST_FILE = "manifest.json"


def write_atomic(path: Union[str, Path], text: str):
    """Write through a temporary file and rename over the target"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class PipelineRunner:
    """Wires configuration, corpus, backend, cache and artifacts for one run"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.output_dir = Path(config.output_dir)
        self.classifier: Optional[ZeroShotClassifier] = None
        self.started_at: Optional[str] = None

    def load_labels(self) -> LabelSet:
        return resolve_label_set(self.config.label_set)

    def load_corpus(self, path: Optional[str] = None, fmt=None) -> Corpus:
        path = path or self.config.corpus_path
        if not path:
            raise ConfigError("No corpus given (use --corpus or corpus.path)")
        return ingest_corpus(
            path,
            fmt or self.config.corpus_format,
            field_map=self.config.field_map,
            require_gold=self.config.require_gold,
        )

    def build_backend(self):
        if self.config.backend == "remote":
            return RemoteBackend(
                endpoint=self.config.endpoint,
                model_id=self.config.model_id,
                template=self.config.template,
                timeout=self.config.timeout,
                attempts=self.config.attempts,
                backoff=self.config.backoff,
            )
        return MockBackend(template=self.config.template)

    def build_cache(self) -> Optional[ScoreCache]:
        if not self.config.cache_path:
            return None
        return ScoreCache(self.config.cache_path)

    async def classify(self, corpus: Corpus, labels: LabelSet, backend=None) -> List[Prediction]:
        """Classify the corpus and write the predictions file"""
        self.started_at = _now()
        backend = backend or self.build_backend()
        self.classifier = ZeroShotClassifier(
            labels=labels,
            backend=backend,
            mode=self.config.mode,
            template=self.config.template,
            truncation_chars=self.config.truncation_chars,
            batch_size=self.config.batch_size,
            parallelism=self.config.parallelism,
            cache=self.build_cache(),
        )
        logger.info(f"Classifying {len(corpus)} records with {backend.descriptor.backend_id} "
                    f"({backend.descriptor.model_id}), {len(labels)} labels")
        try:
            predictions = await self.classifier.classify_corpus(corpus)
        except ClassificationAborted as e:
            self.write_manifest(status="aborted", error=str(e))
            raise
        finally:
            if hasattr(backend, "aclose"):
                await backend.aclose()

        write_atomic(self.output_dir / PREDICTIONS_FILE, dump_predictions(predictions, labels))
        logger.info(f"Wrote {self.output_dir / PREDICTIONS_FILE}")
        return predictions

    def evaluate(
        self, corpus: Corpus, labels: LabelSet, predictions: List[Prediction]
    ) -> Tuple[ConfusionMatrix, EvaluationReport]:
        """Score predictions against gold sectors and write report and heatmap"""
        gold_by_id: Dict[str, Optional[str]] = {record.id: record.gold_sector for record in corpus.records}
        gold, pred = [], []
        for prediction in predictions:
            if prediction.doc_id not in gold_by_id:
                logger.warning(f"Prediction for unknown record {prediction.doc_id} ignored")
                continue
            gold_sector = gold_by_id[prediction.doc_id]
            if gold_sector is None:
                continue
            gold.append(gold_sector)
            pred.append(labels.labels[prediction.predicted_index].gics_name)

        cm, report = evaluate(gold, pred, labels)
        for fmt, filename in REPORT_FILES.items():
            write_atomic(self.output_dir / filename, render_report(report, fmt))
        write_atomic(self.output_dir / HEATMAP_FILE, render_heatmap(cm))
        logger.info(f"Wrote reports and heatmap to {self.output_dir}")
        return cm, report

    def read_predictions(self, labels: LabelSet, path: Optional[str] = None) -> List[Prediction]:
        path = Path(path) if path else self.output_dir / PREDICTIONS_FILE
        try:
            return load_predictions(path, labels)
        except OSError as e:
            raise ConfigError(f"Cannot read predictions {path}: {e}") from e
        except (ValueError, KeyError) as e:
            raise ConfigError(f"Predictions file {path} does not match the label set: {e}") from e

    def manifest(self, status: str = "ok", error: Optional[str] = None) -> Dict:
        classifier = self.classifier
        counts = classifier.stats.as_dict() if classifier else {}
        document = {
            "tool": "sectorzero",
            "version": __version__,
            "started_at": self.started_at or _now(),
            "finished_at": _now(),
            "status": status,
            "config": self.config.model_dump(mode="json"),
            "backend": classifier.backend.descriptor.model_dump() if classifier else None,
            "counts": counts,
            # The server side may truncate premises further than this
            "run_metadata": {
                "template": self.config.template,
                "mode": self.config.mode.value,
                "truncation_chars": self.config.truncation_chars,
                "batch_size": self.config.batch_size,
            },
        }
        if error is not None:
            document["error"] = error
        return document

    def write_manifest(self, status: str = "ok", error: Optional[str] = None) -> Dict:
        document = self.manifest(status, error)
        write_atomic(self.output_dir / MANIFEST_FILE, json.dumps(document, indent=2, sort_keys=True) + "\n")
        logger.info(f"Wrote {self.output_dir / MANIFEST_FILE} (status {status})")
        return document

    async def run(self) -> Dict:
        """End to end: ingest, classify, evaluate, manifest"""
        labels = self.load_labels()
        corpus = self.load_corpus()
        predictions = await self.classify(corpus, labels)
        try:
            self.evaluate(corpus, labels, predictions)
        except (SectorZeroError, OSError) as e:
            self.write_manifest(status="failed", error=f"{type(e).__name__}: {e}")
            raise
        return self.write_manifest()


def run_pipeline(config: RunConfig) -> Dict:
    """Run classify and evaluate for one config; returns the manifest"""
    return asyncio.run(PipelineRunner(config).run())
