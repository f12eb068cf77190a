import random

import pytest

from sectorzero.errors import DuplicateId, IoError, MalformedRecord, UnknownLabel
from sectorzero.modules.corpus import (
    CompanyRecord,
    Corpus,
    CorpusFormat,
    StopwordPolicy,
    apply_stopword_policy,
    corpus_summary,
    default_stopword_policy,
    ingest_corpus,
    render_summary,
    tokenize,
    write_corpus,
)
from sectorzero.modules.taxonomy import SECTOR_DISTRIBUTION

ROWS = [
    {"id": "1", "name": "Acme", "description": "Drills oil wells.", "gics_sector": "Energy"},
    {"id": "2", "name": "Blank", "description": "Sells toys.", "gics_sector": ""},
    {"id": "3", "name": "Bank", "description": "Lends money.", "gics_sector": "Financials"},
]


def test_ingest_csv_filters_missing_gold(write_csv):
    corpus = ingest_corpus(write_csv(ROWS))
    assert [record.id for record in corpus.records] == ["1", "3"]
    assert corpus.filtered_count == 1
    assert corpus.records[0] == CompanyRecord(id="1", name="Acme", description="Drills oil wells.", gold_sector="Energy")
    assert corpus.source.startswith("csv:")


def test_ingest_keeps_unlabeled_when_asked(write_csv):
    corpus = ingest_corpus(write_csv(ROWS), require_gold=False)
    assert len(corpus) == 3
    assert corpus.records[1].gold_sector is None
    assert corpus.filtered_count == 0
    assert [record.id for record in corpus.labeled] == ["1", "3"]


def test_ingest_jsonl_with_field_map(write_jsonl):
    path = write_jsonl([
        {"cid": "a", "text": "Builds software.", "sector": "Information Technology"},
        {"cid": "b", "text": "Runs hospitals.", "sector": "Health Care"},
    ])
    corpus = ingest_corpus(path, CorpusFormat.JSONL, field_map={"id": "cid", "description": "text", "gold": "sector"})
    assert [record.gold_sector for record in corpus.records] == ["Information Technology", "Health Care"]
    assert corpus.records[0].name == ""


def test_ingest_missing_description_reports_row(write_csv):
    rows = ROWS[:1] + [{"id": "9", "name": "Ghost", "description": "  ", "gics_sector": "Energy"}]
    with pytest.raises(MalformedRecord) as excinfo:
        ingest_corpus(write_csv(rows))
    assert excinfo.value.row == 2


def test_ingest_invalid_jsonl_line(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "1", "description": "x", "gics_sector": "Energy"}\n{not json\n', encoding="utf-8")
    with pytest.raises(MalformedRecord) as excinfo:
        ingest_corpus(path, "jsonl")
    assert excinfo.value.row == 2


def test_ingest_duplicate_id(write_csv):
    with pytest.raises(DuplicateId):
        ingest_corpus(write_csv([ROWS[0], ROWS[0]]))


def test_ingest_unreadable_file(tmp_path):
    with pytest.raises(IoError):
        ingest_corpus(tmp_path / "nope.csv")


def test_write_corpus_round_trip(tmp_path, write_csv):
    corpus = ingest_corpus(write_csv(ROWS), require_gold=False)
    for fmt in CorpusFormat:
        path = tmp_path / f"out.{fmt.value}"
        write_corpus(corpus, path, fmt)
        again = ingest_corpus(path, fmt, require_gold=False)
        assert again.records == corpus.records


def test_tokenize_letters_only():
    assert tokenize("Oil & Gas Co., 2nd-largest in the U.S.") == ["oil", "gas", "co", "nd", "largest", "in", "the", "u", "s"]
    assert tokenize("Café Ünited") == ["café", "ünited"]


@pytest.mark.parametrize("text,expected", [
    ("e-commerce 2022", ["e", "commerce"]),
    ("", []),
    ("area 5km² site", ["area", "km", "site"]),
    ("owns ½ stake", ["owns", "stake"]),
    ("Chapter Ⅻ filing", ["chapter", "filing"]),
    ("under_score", ["under", "score"]),
])
def test_tokenize_splits_on_every_non_letter(text, expected):
    assert tokenize(text) == expected



def test_stopword_policy_union():
    policy = StopwordPolicy(
        base_stopwords=frozenset({"the"}),
        verb_lexicon=frozenset({"provides"}),
        country_names=frozenset({"canada"}),
        abbreviations=frozenset({"inc"}),
    )
    tokens = tokenize("The company provides drilling services in Canada Inc")
    assert apply_stopword_policy(tokens, policy) == ["company", "drilling", "services", "in"]


def test_stopword_policy_rejects_bad_entries():
    with pytest.raises(ValueError):
        StopwordPolicy(base_stopwords=frozenset({"The"}))
    with pytest.raises(ValueError):
        StopwordPolicy(verb_lexicon=frozenset({"two words"}))


def test_default_stopword_policy_lexicons():
    policy = default_stopword_policy()
    assert "and" in policy.base_stopwords
    assert "provides" in policy.verb_lexicon
    assert "usa" in policy.country_names
    assert "ltd" in policy.abbreviations


def test_corpus_summary_and_render(original_labels):
    records = []
    for name, count in SECTOR_DISTRIBUTION.items():
        records.extend(
            CompanyRecord(id=f"{name}-{i}", description="x", gold_sector=name) for i in range(count)
        )
    summary = corpus_summary(Corpus(records=tuple(records)), original_labels)
    assert summary.total == 34338
    assert summary.counts == SECTOR_DISTRIBUTION

    text = render_summary(summary)
    lines = text.splitlines()
    assert lines[0].startswith("GICS sector")
    assert lines[0].endswith("Number of companies")
    assert lines[1].split() == ["Energy", "2822"]
    assert lines[-1].split() == ["Total", "34338"]


def test_corpus_summary_unknown_sector(original_labels):
    corpus = Corpus(records=(CompanyRecord(id="x", description="y", gold_sector="Crypto"),))
    with pytest.raises(UnknownLabel) as excinfo:
        corpus_summary(corpus, original_labels)
    assert excinfo.value.record_id == "x"


def test_corpus_summary_empty(original_labels):
    summary = corpus_summary(Corpus(), original_labels)
    assert summary.total == 0
    assert set(summary.counts.values()) == {0}


def test_tokenize_is_stable_under_rejoin():
    rng = random.Random(3)
    alphabet = "abcXYZéß 0123-_,.²½Ⅻ\t\n"
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        tokens = tokenize(text)
        assert tokenize(" ".join(tokens)) == tokens
        assert all(token.isalpha() for token in tokens)


def test_stopword_policy_is_idempotent_and_never_grows():
    policy = default_stopword_policy()
    rng = random.Random(5)
    words = ["the", "company", "provides", "oil", "canada", "inc", "bank", "and", "services", "ltd"]
    for _ in range(200):
        tokens = [rng.choice(words) for _ in range(rng.randint(0, 15))]
        once = apply_stopword_policy(tokens, policy)
        assert len(once) <= len(tokens)
        assert apply_stopword_policy(once, policy) == once
