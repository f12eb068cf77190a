"""
TF-IDF term statistics and per-sector keyword rankings used to propose
richer sector names.

idf(t) = ln((1 + N) / (1 + df(t))) + 1, tf is the raw in-document count and
nothing is normalized. A sector's score for a term sums tf * idf over the
sector's documents.
"""
import csv
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from sklearn.feature_extraction.text import CountVectorizer, TfidfTransformer

from ..errors import EmptyCorpus, EmptyRanking, UnknownLabel
from .corpus import Corpus, StopwordPolicy, apply_stopword_policy, tokenize
from .taxonomy import LabelSet, LabelVariant

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 30


class TfidfStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    vocabulary: Tuple[str, ...]
    doc_count: int
    doc_freq: Dict[str, int]
    idf: Dict[str, float]


class TermRanking(BaseModel):
    model_config = ConfigDict(frozen=True)

    gics_name: str
    ranked_terms: Tuple[Tuple[str, float], ...] = Field(default=())

    @property
    def terms(self) -> List[str]:
        return [term for term, _ in self.ranked_terms]


def _identity(tokens):
    return tokens


def fit_tfidf(docs: Sequence[Sequence[str]]) -> TfidfStats:
    if not docs:
        raise EmptyCorpus()
    docs = [list(doc) for doc in docs]
    if not any(docs):
        return TfidfStats(vocabulary=(), doc_count=len(docs), doc_freq={}, idf={})

    # Documents arrive tokenized, so the analyzer just passes them through
    vectorizer = CountVectorizer(analyzer=_identity)
    counts = vectorizer.fit_transform(docs)
    transformer = TfidfTransformer(norm=None, use_idf=True, smooth_idf=True, sublinear_tf=False)
    transformer.fit(counts)

    vocabulary = tuple(vectorizer.get_feature_names_out().tolist())
    doc_freq = np.asarray((counts > 0).sum(axis=0)).ravel()
    stats = TfidfStats(
        vocabulary=vocabulary,
        doc_count=len(docs),
        doc_freq={term: int(df) for term, df in zip(vocabulary, doc_freq)},
        idf={term: float(value) for term, value in zip(vocabulary, transformer.idf_)},
    )
    logger.info(f"Fitted TF-IDF over {stats.doc_count} documents, {len(vocabulary)} terms")
    return stats


def rank_class_terms(
    stats: TfidfStats,
    docs_by_class: Mapping[str, Sequence[Sequence[str]]],
    gics_name: str,
    k: int = DEFAULT_TOP_K,
) -> TermRanking:
    if gics_name not in docs_by_class:
        raise UnknownLabel(gics_name)
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")

    counts = Counter(token for doc in docs_by_class[gics_name] for token in doc)
    unknown = [term for term in counts if term not in stats.idf]
    if unknown:
        logger.warning(f"{len(unknown)} terms of '{gics_name}' are outside the fitted vocabulary, ignored")

    # Vocabulary is sorted, so a stable sort on score keeps ties in lexicographic order
    terms = [term for term in stats.vocabulary if counts.get(term, 0) > 0]
    scores = np.array([counts[term] * stats.idf[term] for term in terms], dtype=float)
    order = np.argsort(-scores, kind="stable")[:k]
    return TermRanking(
        gics_name=gics_name,
        ranked_terms=tuple((terms[i], float(scores[i])) for i in order),
    )


def rank_all_classes(
    stats: TfidfStats,
    docs_by_class: Mapping[str, Sequence[Sequence[str]]],
    k: int = DEFAULT_TOP_K,
) -> List[TermRanking]:
    return [rank_class_terms(stats, docs_by_class, name, k) for name in docs_by_class]


def propose_enriched_labels(rankings: Sequence[TermRanking], m: int = 3) -> Dict[str, str]:
    """Candidate display names from the top terms; meant for manual curation"""
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    proposals = {}
    for ranking in rankings:
        if not ranking.ranked_terms:
            raise EmptyRanking(ranking.gics_name)
        proposals[ranking.gics_name] = ", ".join(term.title() for term in ranking.terms[:m])
    return proposals


def proposals_to_label_set(labels: LabelSet, proposals: Mapping[str, str]) -> LabelSet:
    """Custom label set in the order of `labels`, falling back to the current name"""
    pairs = [(label.gics_name, proposals.get(label.gics_name, label.display_name)) for label in labels.labels]
    return LabelSet.from_pairs(LabelVariant.CUSTOM, pairs)


def docs_by_class(corpus: Corpus, labels: LabelSet, policy: StopwordPolicy) -> Dict[str, List[List[str]]]:
    """Stopword-filtered token lists grouped by gold sector, in label order"""
    grouped: Dict[str, List[List[str]]] = {name: [] for name in labels.gics_names}
    for record in corpus.records:
        if record.gold_sector is None:
            continue
        if record.gold_sector not in grouped:
            raise UnknownLabel(record.gold_sector, record.id)
        grouped[record.gold_sector].append(apply_stopword_policy(tokenize(record.description), policy))
    return grouped


def export_rankings_csv(rankings: Sequence[TermRanking], path: Union[str, Path]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["gics_name", "rank", "term", "score"])
        for ranking in rankings:
            for rank, (term, score) in enumerate(ranking.ranked_terms, start=1):
                writer.writerow([ranking.gics_name, rank, term, repr(score)])
