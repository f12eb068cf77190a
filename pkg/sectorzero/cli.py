#!/usr/bin/env python3
"""sectorzero command line: ingest, summary, enrich, classify, evaluate, run, gen-synthetic"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __description__, __version__
from .config.settings import RunConfig, Settings
from .errors import (
    BadTemplate,
    ConfigError,
    DuplicateId,
    IoError,
    LabelSetError,
    MalformedRecord,
    SectorZeroError,
    UnknownLabel,
)
from .modules.corpus import CorpusFormat, corpus_summary, default_stopword_policy, render_summary, write_corpus
from .modules.enrich import (
    docs_by_class,
    export_rankings_csv,
    fit_tfidf,
    propose_enriched_labels,
    proposals_to_label_set,
    rank_all_classes,
)
from .modules.synthetic import generate_synthetic_corpus
from .modules.taxonomy import save_label_set
from .services.pipeline import PipelineRunner, run_pipeline

logger = logging.getLogger("sectorzero")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

CONFIG_ERRORS = (ConfigError, IoError, MalformedRecord, DuplicateId, UnknownLabel, LabelSetError, BadTemplate)

# flag destination -> dotted settings key
FLAG_KEYS = {
    "corpus": "corpus.path",
    "format": "corpus.format",
    "field_map": "corpus.field_map",
    "require_gold": "corpus.require_gold",
    "labels": "labels",
    "backend": "backend.kind",
    "endpoint": "backend.endpoint",
    "model": "backend.model",
    "timeout": "backend.timeout",
    "attempts": "backend.attempts",
    "backoff": "backend.backoff",
    "template": "classify.template",
    "mode": "classify.mode",
    "truncation": "classify.truncation_chars",
    "batch_size": "classify.batch_size",
    "parallelism": "classify.parallelism",
    "cache": "classify.cache",
    "top_k": "enrich.top_k",
    "candidate_terms": "enrich.candidate_terms",
    "seed": "run.seed",
    "per_class": "run.per_class",
    "out": "run.output_dir",
    "log_level": "logging.level",
    "log_file": "logging.file",
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--corpus", help="Corpus file (CSV or JSONL)")
    common.add_argument("--format", choices=[f.value for f in CorpusFormat], help="Corpus file format")
    common.add_argument("--field-map", help='JSON object mapping record fields to columns, e.g. {"description": "text"}')
    gold = common.add_mutually_exclusive_group()
    gold.add_argument("--require-gold", dest="require_gold", action="store_true", default=None,
                      help="Drop records without a gold sector (default)")
    gold.add_argument("--keep-unlabeled", dest="require_gold", action="store_false",
                      help="Keep records without a gold sector")
    common.add_argument("--labels", help="original, enriched or a label-set JSON file")
    common.add_argument("--backend", choices=["mock", "remote"], help="NLI backend")
    common.add_argument("--endpoint", help="Remote NLI server base URL (or SECTORZERO_ENDPOINT)")
    common.add_argument("--model", help="Model id sent to the remote backend")
    common.add_argument("--timeout", type=float, help="Per-request timeout in seconds")
    common.add_argument("--attempts", type=int, help="Remote request attempts before giving up")
    common.add_argument("--backoff", type=float, help="First retry delay in seconds, doubled per retry")
    common.add_argument("--template", help="Hypothesis template containing '{}' once")
    common.add_argument("--mode", choices=["single", "multi"], help="Score normalization")
    common.add_argument("--truncation", type=int, help="Premise length limit in characters")
    common.add_argument("--batch-size", type=int, help="Pairs per backend request")
    common.add_argument("--parallelism", type=int, help="Documents scored concurrently")
    common.add_argument("--cache", help="Score cache JSONL file")
    common.add_argument("--top-k", type=int, help="Terms kept per sector by enrich")
    common.add_argument("--candidate-terms", type=int, help="Terms joined into a candidate label")
    common.add_argument("--seed", type=int, help="Synthetic corpus seed")
    common.add_argument("--per-class", type=int, help="Synthetic records per sector")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    common.add_argument("--log-file", help="Also log to this file")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sectorzero", description=__description__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_flags()
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("ingest", parents=[common], help="Validate a corpus and write it as JSONL")
    commands.add_parser("summary", parents=[common], help="Print companies per sector")
    commands.add_parser("enrich", parents=[common], help="Rank sector terms and propose label names")
    commands.add_parser("classify", parents=[common], help="Zero-shot classify a corpus")
    evaluate = commands.add_parser("evaluate", parents=[common], help="Score predictions against gold sectors")
    evaluate.add_argument("--predictions", help="Predictions JSONL (default: <out>/predictions.jsonl)")
    commands.add_parser("run", parents=[common], help="Classify and evaluate in one go")
    synthetic = commands.add_parser("gen-synthetic", parents=[common], help="Write a seeded synthetic corpus")
    synthetic.add_argument("--output", help="Corpus file to write (default: <out>/synthetic.<format>)")
    return parser


def _parse_field_map(raw: str) -> dict:
    try:
        value = json.loads(raw)
    except ValueError as e:
        raise ConfigError(f"--field-map is not valid JSON: {e}") from e
    if not isinstance(value, dict):
        raise ConfigError("--field-map must be a JSON object")
    return value


def load_settings(args: argparse.Namespace) -> Settings:
    settings = Settings(args.config)
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if dest == "field_map" and value is not None:
            value = _parse_field_map(value)
        if value is not None:
            settings.set(key, value)
    return settings


def _setup_logging(settings: Settings):
    """Setup logging"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        Path(settings.log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.log_file, encoding="utf-8"))

    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format=settings.log_format,
        handlers=handlers,
    )


def cmd_gen_synthetic(runner: PipelineRunner, args: argparse.Namespace):
    config = runner.config
    corpus = generate_synthetic_corpus(runner.load_labels(), config.per_class, config.seed)
    output = Path(args.output) if args.output else runner.output_dir / f"synthetic.{config.corpus_format.value}"
    write_corpus(corpus, output, config.corpus_format)
    logger.info(f"Wrote {len(corpus)} synthetic records to {output}")
    print(output)


def cmd_ingest(runner: PipelineRunner, args: argparse.Namespace):
    corpus = runner.load_corpus()
    output = runner.output_dir / "corpus.jsonl"
    write_corpus(corpus, output, CorpusFormat.JSONL)
    print(f"{len(corpus)} records written to {output} ({corpus.filtered_count} dropped without gold sector)")


def cmd_summary(runner: PipelineRunner, args: argparse.Namespace):
    summary = corpus_summary(runner.load_corpus(), runner.load_labels())
    sys.stdout.write(render_summary(summary))


def cmd_enrich(runner: PipelineRunner, args: argparse.Namespace):
    config = runner.config
    labels = runner.load_labels()
    corpus = runner.load_corpus()
    grouped = docs_by_class(corpus, labels, default_stopword_policy())

    stats = fit_tfidf([doc for docs in grouped.values() for doc in docs])
    rankings = rank_all_classes(stats, grouped, config.top_k)
    export_rankings_csv(rankings, runner.output_dir / "rankings.csv")

    ranked = [ranking for ranking in rankings if ranking.ranked_terms]
    for ranking in rankings:
        if not ranking.ranked_terms:
            logger.warning(f"No terms for '{ranking.gics_name}', keeping its current name")
    proposals = propose_enriched_labels(ranked, config.candidate_terms)
    save_label_set(proposals_to_label_set(labels, proposals), runner.output_dir / "candidate_labels.json")

    for gics_name, proposal in proposals.items():
        print(f"{gics_name}: {proposal}")


def cmd_classify(runner: PipelineRunner, args: argparse.Namespace):
    labels = runner.load_labels()
    corpus = runner.load_corpus()
    asyncio.run(runner.classify(corpus, labels))
    manifest = runner.write_manifest()
    print(json.dumps(manifest["counts"], sort_keys=True))


def cmd_evaluate(runner: PipelineRunner, args: argparse.Namespace):
    labels = runner.load_labels()
    corpus = runner.load_corpus()
    predictions = runner.read_predictions(labels, args.predictions)
    _, report = runner.evaluate(corpus, labels, predictions)
    print(f"accuracy {report.accuracy:.4f}, weighted F1 {report.weighted_avg.f1:.4f}")


def cmd_run(runner: PipelineRunner, args: argparse.Namespace):
    manifest = run_pipeline(runner.config)
    print(json.dumps(manifest["counts"], sort_keys=True))


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "ingest": cmd_ingest,
    "summary": cmd_summary,
    "enrich": cmd_enrich,
    "classify": cmd_classify,
    "evaluate": cmd_evaluate,
    "run": cmd_run,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings(args)
        _setup_logging(settings)
        config = RunConfig.from_settings(settings)
    except CONFIG_ERRORS as e:
        print(f"sectorzero: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info(f"sectorzero {__version__}: {args.command}")
    try:
        COMMANDS[args.command](PipelineRunner(config), args)
    except CONFIG_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_CONFIG
    except SectorZeroError as e:
        # BackendUnavailable, ProtocolError, ClassificationAborted and empty inputs
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
