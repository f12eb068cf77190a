import json

import pytest

from sectorzero.config.settings import ENDPOINT_ENV_VAR, RunConfig, Settings
from sectorzero.errors import ConfigError, IoError
from sectorzero.modules.zeroshot import ScoringMode


def write_config(tmp_path, data):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_defaults():
    settings = Settings()
    config = RunConfig.from_settings(settings)
    assert config.label_set == "enriched"
    assert config.backend == "mock"
    assert config.template == "This example is {}."
    assert config.mode == ScoringMode.SINGLE_LABEL
    assert config.truncation_chars == 1200
    assert config.batch_size == 16
    assert config.attempts == 3
    assert settings.log_level == "INFO"


def test_file_merges_over_defaults(tmp_path):
    settings = Settings(write_config(tmp_path, {
        "classify": {"batch_size": 4},
        "corpus": {"field_map": {"id": "cid", "description": "text"}},
    }))
    assert settings.get("classify.batch_size") == 4
    assert settings.get("classify.parallelism") == 1
    # field_map is replaced, not merged
    assert settings.get("corpus.field_map") == {"id": "cid", "description": "text"}


def test_set_dotted_keys_win():
    settings = Settings()
    settings.set("backend.kind", "remote")
    settings.set("backend.endpoint", "http://nli:8080")
    config = RunConfig.from_settings(settings)
    assert config.backend == "remote"
    assert config.endpoint == "http://nli:8080"


def test_endpoint_from_environment(monkeypatch):
    monkeypatch.setenv(ENDPOINT_ENV_VAR, "http://from-env")
    settings = Settings()
    assert settings.endpoint == "http://from-env"
    settings.set("backend.endpoint", "http://from-flag")
    assert settings.endpoint == "http://from-flag"


@pytest.mark.parametrize("key,value", [
    ("classify.batch_size", 0),
    ("classify.parallelism", 0),
    ("classify.truncation_chars", 63),
    ("classify.template", "no placeholder"),
    ("classify.mode", "both"),
    ("corpus.format", "xml"),
])
def test_invalid_values_raise_config_error(key, value):
    settings = Settings()
    settings.set(key, value)
    with pytest.raises(ConfigError):
        RunConfig.from_settings(settings)


def test_remote_requires_endpoint(monkeypatch):
    monkeypatch.delenv(ENDPOINT_ENV_VAR, raising=False)
    settings = Settings()
    settings.set("backend.kind", "remote")
    with pytest.raises(ConfigError):
        RunConfig.from_settings(settings)


def test_bad_config_files(tmp_path):
    with pytest.raises(IoError):
        Settings(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        Settings(str(broken))
    with pytest.raises(ConfigError):
        Settings(write_config(tmp_path, [1, 2]))


def test_run_config_is_frozen():
    config = RunConfig()
    with pytest.raises(Exception):
        config.batch_size = 2
