"""
Seeded synthetic company corpus.

Stands in for the licensed company-description extract. Every description
embeds 2-4 tokens of its sector's display name in a template sentence, and
the filler text is chosen so it shares no token with any label, which makes
the token-overlap backend classify the corpus perfectly whenever display
names share no tokens.
"""
import logging
import random
from typing import List, Set

from .corpus import CompanyRecord, Corpus, default_stopword_policy, tokenize
from .taxonomy import LabelSet

logger = logging.getLogger(__name__)

OPENINGS = [
    "The firm is active in",
    "A business built around",
    "This group works with",
    "Its main activity covers",
    "The enterprise concentrates on",
]

FILLERS = [
    "across several regions",
    "for clients worldwide",
    "through a network of subsidiaries",
    "with a long operating history",
    "for institutional customers",
    "from offices in major cities",
    "under long term contracts",
]

NAME_PREFIXES = ["Northwind", "Bluepeak", "Silverline", "Crescent", "Harbor", "Summit", "Oakridge", "Redstone"]
NAME_SUFFIXES = ["Holdings", "Group", "Partners", "Works", "Enterprises", "Company"]


def _label_tokens(labels: LabelSet) -> Set[str]:
    return {token for name in labels.display_names for token in tokenize(name)}


def _clean(phrases: List[str], banned: Set[str]) -> List[str]:
    return [phrase for phrase in phrases if not set(tokenize(phrase)) & banned]


def generate_synthetic_corpus(labels: LabelSet, per_class: int, seed: int) -> Corpus:
    if per_class < 1:
        raise ValueError(f"per_class must be at least 1, got {per_class}")

    rng = random.Random(seed)
    base_stopwords = default_stopword_policy().base_stopwords
    banned = _label_tokens(labels)
    openings = _clean(OPENINGS, banned) or ["Activity:"]
    fillers = _clean(FILLERS, banned) or [""]

    records = []
    for label in labels.labels:
        # Stopwords such as "and" are shared between names and carry no signal
        vocabulary = []
        for token in tokenize(label.display_name):
            if token not in base_stopwords and token not in vocabulary:
                vocabulary.append(token)
        if not vocabulary:
            vocabulary = tokenize(label.display_name)[:1]

        for n in range(per_class):
            wanted = rng.randint(2, 4)
            picks = rng.sample(vocabulary, min(wanted, len(vocabulary)))
            while len(picks) < 2:
                picks.append(rng.choice(vocabulary))
            description = f"{rng.choice(openings)} {' '.join(picks)} {rng.choice(fillers)}".strip() + "."
            records.append(CompanyRecord(
                id=f"syn-{label.index:02d}-{n:03d}",
                name=f"{rng.choice(NAME_PREFIXES)} {rng.choice(NAME_SUFFIXES)}",
                description=description,
                gold_sector=label.gics_name,
            ))

    logger.info(f"Generated {len(records)} synthetic records ({per_class} per class, seed {seed})")
    return Corpus(records=tuple(records), source=f"synthetic:seed={seed}", filtered_count=0)
