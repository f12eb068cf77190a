import csv
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import DuplicateId, IoError, MalformedRecord, UnknownLabel
from .taxonomy import LabelSet

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent.parent / "data"

# Logical field -> column/key name
DEFAULT_FIELD_MAP: Dict[str, str] = {
    "id": "id",
    "name": "name",
    "description": "description",
    "gold": "gics_sector",
}

class CorpusFormat(str, Enum):
    CSV = "csv"
    JSONL = "jsonl"


class CompanyRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    name: str = ""
    description: str
    gold_sector: Optional[str] = None

    @field_validator("description")
    @classmethod
    def _description_present(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("description is empty")
        return value


class Corpus(BaseModel):
    model_config = ConfigDict(frozen=True)

    records: Tuple[CompanyRecord, ...] = ()
    source: str = ""
    filtered_count: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _unique_ids(self):
        seen = set()
        for record in self.records:
            if record.id in seen:
                raise DuplicateId(record.id)
            seen.add(record.id)
        return self

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labeled(self) -> List[CompanyRecord]:
        return [record for record in self.records if record.gold_sector is not None]


class StopwordPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    base_stopwords: FrozenSet[str] = frozenset()
    verb_lexicon: FrozenSet[str] = frozenset()
    country_names: FrozenSet[str] = frozenset()
    abbreviations: FrozenSet[str] = frozenset()

    @field_validator("base_stopwords", "verb_lexicon", "country_names", "abbreviations")
    @classmethod
    def _valid_entries(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        for entry in value:
            if not entry or entry != entry.lower() or any(ch.isspace() for ch in entry):
                raise ValueError(f"invalid lexicon entry {entry!r}: must be lowercase, non-empty, without whitespace")
        return value

    @property
    def stopwords(self) -> FrozenSet[str]:
        return self.base_stopwords | self.verb_lexicon | self.country_names | self.abbreviations


def _read_rows(path: Path, fmt: CorpusFormat) -> Iterator[Tuple[int, Mapping]]:
    """Yield (row number, mapping) pairs; row numbers count data rows from 1"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        if fmt == CorpusFormat.CSV:
            reader = csv.DictReader(f)
            if reader.fieldnames is None:
                raise IoError(path, "missing CSV header row")
            for row_number, row in enumerate(reader, start=1):
                yield row_number, row
        else:
            row_number = 0
            for line in f:
                if not line.strip():
                    continue
                row_number += 1
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise MalformedRecord(row_number, f"invalid JSON: {e}") from e
                if not isinstance(obj, dict):
                    raise MalformedRecord(row_number, "line is not a JSON object")
                yield row_number, obj


def _field(row: Mapping, column: Optional[str]) -> Optional[str]:
    if column is None:
        return None
    value = row.get(column)
    if value is None:
        return None
    return str(value)


def ingest_corpus(
    path: Union[str, Path],
    fmt: Union[CorpusFormat, str] = CorpusFormat.CSV,
    field_map: Optional[Mapping[str, str]] = None,
    require_gold: bool = True,
) -> Corpus:
    """Read company records from CSV or JSONL, preserving file order"""
    path = Path(path)
    fmt = CorpusFormat(fmt)
    columns = {**DEFAULT_FIELD_MAP, **(field_map or {})}

    records: List[CompanyRecord] = []
    seen_ids = set()
    filtered = 0
    try:
        for row_number, row in _read_rows(path, fmt):
            record_id = _field(row, columns["id"])
            description = _field(row, columns["description"])
            if record_id is None or not record_id.strip():
                raise MalformedRecord(row_number, f"missing '{columns['id']}'")
            if description is None or not description.strip():
                raise MalformedRecord(row_number, f"missing '{columns['description']}'")

            gold = _field(row, columns.get("gold"))
            gold = gold.strip() if gold is not None and gold.strip() else None
            if gold is None and require_gold:
                filtered += 1
                continue

            record_id = record_id.strip()
            if record_id in seen_ids:
                raise DuplicateId(record_id)
            seen_ids.add(record_id)
            records.append(CompanyRecord(
                id=record_id,
                name=_field(row, columns.get("name")) or "",
                description=description,
                gold_sector=gold,
            ))
    except (OSError, UnicodeDecodeError, csv.Error) as e:
        raise IoError(path, str(e)) from e

    corpus = Corpus(records=tuple(records), source=f"{fmt.value}:{path}", filtered_count=filtered)
    logger.info(f"Ingested {len(records)} records from {path} ({filtered} dropped without gold sector)")
    return corpus


def write_corpus(corpus: Corpus, path: Union[str, Path], fmt: Union[CorpusFormat, str] = CorpusFormat.JSONL):
    """Serialize a corpus with the default column names"""
    path = Path(path)
    fmt = CorpusFormat(fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = DEFAULT_FIELD_MAP
    rows = [
        {
            columns["id"]: record.id,
            columns["name"]: record.name,
            columns["description"]: record.description,
            columns["gold"]: record.gold_sector or "",
        }
        for record in corpus.records
    ]
    with open(path, "w", encoding="utf-8", newline="") as f:
        if fmt == CorpusFormat.CSV:
            writer = csv.DictWriter(f, fieldnames=[columns[k] for k in ("id", "name", "description", "gold")])
            writer.writeheader()
            writer.writerows(rows)
        else:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False) + "\n")


def tokenize(text: str) -> List[str]:
    """Lowercased runs of alphabetic characters; anything else separates tokens"""
    lowered = text.lower()
    return "".join(ch if ch.isalpha() else " " for ch in lowered).split()


def apply_stopword_policy(tokens: List[str], policy: StopwordPolicy) -> List[str]:
    stopwords = policy.stopwords
    return [token for token in tokens if token not in stopwords]


def load_lexicon(path: Union[str, Path]) -> FrozenSet[str]:
    """One lowercase token per line, '#' comment lines ignored"""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(path, str(e)) from e
    return frozenset(
        line.strip() for line in lines
        if line.strip() and not line.lstrip().startswith("#")
    )


def default_stopword_policy(
    stopwords: Optional[Union[str, Path]] = None,
    verbs: Optional[Union[str, Path]] = None,
    countries: Optional[Union[str, Path]] = None,
    abbreviations: Optional[Union[str, Path]] = None,
) -> StopwordPolicy:
    """Policy from the shipped lexicons; any of them can be swapped for another file"""
    return StopwordPolicy(
        base_stopwords=load_lexicon(stopwords or DATA_DIR / "stopwords.txt"),
        verb_lexicon=load_lexicon(verbs or DATA_DIR / "verbs.txt"),
        country_names=load_lexicon(countries or DATA_DIR / "countries.txt"),
        abbreviations=load_lexicon(abbreviations or DATA_DIR / "abbreviations.txt"),
    )


class CorpusSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    counts: Dict[str, int]
    total: int


def corpus_summary(corpus: Corpus, labels: LabelSet) -> CorpusSummary:
    counts = {name: 0 for name in labels.gics_names}
    for record in corpus.records:
        if record.gold_sector is None:
            continue
        if record.gold_sector not in counts:
            raise UnknownLabel(record.gold_sector, record.id)
        counts[record.gold_sector] += 1
    return CorpusSummary(counts=counts, total=sum(counts.values()))


def render_summary(summary: CorpusSummary) -> str:
    """Two-column text table: sector, number of companies"""
    header = ("GICS sector", "Number of companies")
    width = max([len(header[0])] + [len(name) for name in summary.counts])
    lines = [f"{header[0]:<{width}}  {header[1]}"]
    for name, count in summary.counts.items():
        lines.append(f"{name:<{width}}  {count:>{len(header[1])}}")
    lines.append(f"{'Total':<{width}}  {summary.total:>{len(header[1])}}")
    return "\n".join(lines) + "\n"
