import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError, IoError
from ..modules.corpus import DEFAULT_FIELD_MAP, CorpusFormat
from ..modules.zeroshot import DEFAULT_BATCH_SIZE, DEFAULT_TEMPLATE, DEFAULT_TRUNCATION_CHARS, ScoringMode

ENDPOINT_ENV_VAR = "SECTORZERO_ENDPOINT"


class Settings:
    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file merged over the defaults"""
        config = self._get_default_config()
        if not self.config_file:
            return config

        config_path = Path(self.config_file)
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                loaded = json.load(f)
        except OSError as e:
            raise IoError(config_path, str(e)) from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {config_path} is not valid JSON: {e}") from e
        if not isinstance(loaded, dict):
            raise ConfigError(f"Config file {config_path} must contain a JSON object")
        return self._merge(config, loaded)

    @staticmethod
    def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(base)
        for key, value in override.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "field_map":
                merged[key] = Settings._merge(merged[key], value)
            else:
                merged[key] = value
        return merged

    def _get_default_config(self) -> Dict[str, Any]:
        """Default configuration"""
        return {
            "corpus": {
                "path": None,
                "format": "csv",
                "field_map": dict(DEFAULT_FIELD_MAP),
                "require_gold": True
            },
            "labels": "enriched",
            "backend": {
                "kind": "mock",
                "endpoint": None,
                "model": "valhalla/distilbart-mnli-12-3",
                "timeout": 30.0,
                "attempts": 3,
                "backoff": 0.5
            },
            "classify": {
                "template": DEFAULT_TEMPLATE,
                "mode": "single",
                "truncation_chars": DEFAULT_TRUNCATION_CHARS,
                "batch_size": DEFAULT_BATCH_SIZE,
                "parallelism": 1,
                "cache": None
            },
            "enrich": {
                "top_k": 30,
                "candidate_terms": 3
            },
            "run": {
                "seed": 7,
                "per_class": 2,
                "output_dir": "./out"
            },
            "logging": {
                "level": "INFO",
                "file": None,
                "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            }
        }

    def get(self, key: str, default: Any = None) -> Any:
        """Get config value by key (supports nested keys with dots)"""
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def set(self, key: str, value: Any):
        """Set config value by key (supports nested keys with dots)"""
        keys = key.split('.')
        config = self.config

        for k in keys[:-1]:
            if k not in config or not isinstance(config[k], dict):
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    # Properties for quick access to commonly used configurations
    @property
    def output_dir(self) -> str:
        return self.get('run.output_dir', './out')

    @property
    def log_level(self) -> str:
        return str(self.get('logging.level', 'INFO')).upper()

    @property
    def log_file(self) -> Optional[str]:
        return self.get('logging.file')

    @property
    def log_format(self) -> str:
        return self.get('logging.format', "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    @property
    def endpoint(self) -> Optional[str]:
        return self.get('backend.endpoint') or os.environ.get(ENDPOINT_ENV_VAR)


class RunConfig(BaseModel):
    """Validated snapshot of everything a run depends on"""

    model_config = ConfigDict(frozen=True)

    corpus_path: Optional[str] = None
    corpus_format: CorpusFormat = CorpusFormat.CSV
    field_map: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_FIELD_MAP))
    require_gold: bool = True
    label_set: str = "enriched"
    backend: Literal["mock", "remote"] = "mock"
    endpoint: Optional[str] = None
    model_id: str = "valhalla/distilbart-mnli-12-3"
    timeout: float = Field(default=30.0, gt=0)
    attempts: int = Field(default=3, ge=1)
    backoff: float = Field(default=0.5, ge=0)
    template: str = DEFAULT_TEMPLATE
    mode: ScoringMode = ScoringMode.SINGLE_LABEL
    truncation_chars: int = Field(default=DEFAULT_TRUNCATION_CHARS, ge=64)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)
    parallelism: int = Field(default=1, ge=1)
    cache_path: Optional[str] = None
    top_k: int = Field(default=30, ge=1)
    candidate_terms: int = Field(default=3, ge=1)
    seed: int = 7
    per_class: int = Field(default=2, ge=1)
    output_dir: str = "./out"

    @model_validator(mode="after")
    def _check_backend(self):
        if self.backend == "remote" and not self.endpoint:
            raise ValueError(f"remote backend needs --endpoint or {ENDPOINT_ENV_VAR}")
        if self.template.count("{}") != 1:
            raise ValueError(f"template must contain '{{}}' exactly once: {self.template!r}")
        return self

    @classmethod
    def from_settings(cls, settings: Settings) -> "RunConfig":
        values = {
            "corpus_path": settings.get('corpus.path'),
            "corpus_format": settings.get('corpus.format'),
            "field_map": settings.get('corpus.field_map'),
            "require_gold": settings.get('corpus.require_gold'),
            "label_set": settings.get('labels'),
            "backend": settings.get('backend.kind'),
            "endpoint": settings.endpoint,
            "model_id": settings.get('backend.model'),
            "timeout": settings.get('backend.timeout'),
            "attempts": settings.get('backend.attempts'),
            "backoff": settings.get('backend.backoff'),
            "template": settings.get('classify.template'),
            "mode": settings.get('classify.mode'),
            "truncation_chars": settings.get('classify.truncation_chars'),
            "batch_size": settings.get('classify.batch_size'),
            "parallelism": settings.get('classify.parallelism'),
            "cache_path": settings.get('classify.cache'),
            "top_k": settings.get('enrich.top_k'),
            "candidate_terms": settings.get('enrich.candidate_terms'),
            "seed": settings.get('run.seed'),
            "per_class": settings.get('run.per_class'),
            "output_dir": settings.output_dir,
        }
        try:
            return cls(**{key: value for key, value in values.items() if value is not None})
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration:\n{e}") from e
