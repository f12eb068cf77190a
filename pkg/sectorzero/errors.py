"""Exception hierarchy shared by all sectorzero modules."""
from typing import Optional


class SectorZeroError(Exception):
    """Base class for every error raised by sectorzero"""


# Taxonomy

class InvalidCodeLength(SectorZeroError):
    def __init__(self, text: str):
        super().__init__(f"GICS code '{text}' has length {len(text)}, expected 2, 4, 6 or 8")
        self.text = text


class InvalidCodeCharacter(SectorZeroError):
    def __init__(self, text: str):
        super().__init__(f"GICS code '{text}' contains non-digit characters")
        self.text = text


class LabelSetError(SectorZeroError):
    """Label set file or construction violates LabelSet invariants"""


# Corpus

class IoError(SectorZeroError):
    def __init__(self, path, reason: str):
        super().__init__(f"Cannot read {path}: {reason}")
        self.path = path


class MalformedRecord(SectorZeroError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"Malformed record at row {row}: {reason}")
        self.row = row


class DuplicateId(SectorZeroError):
    def __init__(self, record_id: str):
        super().__init__(f"Duplicate record id: {record_id}")
        self.record_id = record_id


class UnknownLabel(SectorZeroError):
    def __init__(self, name: str, record_id: Optional[str] = None):
        where = f" (record {record_id})" if record_id is not None else ""
        super().__init__(f"Unknown label '{name}'{where}")
        self.name = name
        self.record_id = record_id


# Enrichment

class EmptyCorpus(SectorZeroError):
    def __init__(self):
        super().__init__("Cannot fit TF-IDF statistics on an empty document list")


class EmptyRanking(SectorZeroError):
    def __init__(self, gics_name: str):
        super().__init__(f"Term ranking for '{gics_name}' is empty")
        self.gics_name = gics_name


# Zero-shot

class BadTemplate(SectorZeroError):
    def __init__(self, template: str, count: int):
        super().__init__(f"Hypothesis template must contain '{{}}' exactly once, found {count}: {template!r}")
        self.template = template


class EmptyLabelSet(SectorZeroError):
    def __init__(self):
        super().__init__("Label set is empty")


class BackendUnavailable(SectorZeroError):
    """NLI backend kept failing after all retry attempts"""


class ProtocolError(SectorZeroError):
    """NLI backend answered with a response that violates the wire protocol"""


class ClassificationAborted(SectorZeroError):
    def __init__(self, completed: int, total: int, cause: Exception):
        super().__init__(f"Classification aborted after {completed}/{total} records: {cause}")
        self.completed = completed
        self.total = total
        self.cause = cause


# Evaluation

class LengthMismatch(SectorZeroError):
    def __init__(self, gold: int, pred: int):
        super().__init__(f"Gold and predicted label lists differ in length ({gold} vs {pred})")


class EmptyEvaluation(SectorZeroError):
    def __init__(self):
        super().__init__("Nothing to evaluate: total support is 0")


# Configuration

class ConfigError(SectorZeroError):
    """Run configuration is invalid"""
