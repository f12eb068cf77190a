import csv
import json
from pathlib import Path

import pytest

from sectorzero.modules.taxonomy import LabelVariant, builtin_label_set

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def enriched_labels():
    return builtin_label_set(LabelVariant.ENRICHED)


@pytest.fixture
def original_labels():
    return builtin_label_set(LabelVariant.ORIGINAL)


@pytest.fixture
def write_csv(tmp_path):
    def _write(rows, name="corpus.csv", fieldnames=("id", "name", "description", "gics_sector")):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(fieldnames))
            writer.writeheader()
            writer.writerows(rows)
        return path
    return _write


@pytest.fixture
def write_jsonl(tmp_path):
    def _write(rows, name="corpus.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")
        return path
    return _write


@pytest.fixture
def golden():
    def _read(name):
        return (GOLDEN_DIR / name).read_bytes()
    return _read


@pytest.fixture
def golden_corpus():
    return GOLDEN_DIR / "companies.csv"
