"""Service configuration: defaults, environment variables, JSON config file.

Precedence (lowest to highest): built-in defaults, environment variables
(LASTMILE_CHAT_URL, LASTMILE_EMBED_URL), then the JSON config file named on
the command line or in LASTMILE_CONFIG. Referenced paths must exist at load
time or loading fails.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .evaluation import REFERENCE_EMBED_MODEL
from .retrieval import RetrievalConfig

ENV_CHAT_URL = "LASTMILE_CHAT_URL"
ENV_EMBED_URL = "LASTMILE_EMBED_URL"
ENV_CONFIG = "LASTMILE_CONFIG"


@dataclass
class ServiceConfig:
    manual_dir: str | None = None
    listen_host: str = "127.0.0.1"
    listen_port: int = 8080

    chat_url: str | None = None
    chat_model: str = "default"
    chat_timeout_ms: int = 30_000
    chat_retries: int = 2

    embed_url: str | None = None
    embed_model: str = REFERENCE_EMBED_MODEL
    embed_timeout_ms: int = 30_000
    embed_retries: int = 2

    max_inflight: int = 8
    max_regenerations: int = 2

    top_k: int = 4
    grounding_threshold: float = 0.35
    lexical_fallback: bool = True
    instructional_section_cap: int = 16

    lexicon_path: str | None = None
    template_dir: str | None = None
    log_path: str = "query_log.jsonl"
    log_max_bytes: int = 5_000_000
    log_backups: int = 3

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            top_k=self.top_k,
            grounding_threshold=self.grounding_threshold,
            lexical_fallback=self.lexical_fallback,
            instructional_section_cap=self.instructional_section_cap,
        )


_FIELD_NAMES = {f.name for f in dataclasses.fields(ServiceConfig)}


def _validate(config: ServiceConfig) -> None:
    if not 0.0 <= config.grounding_threshold <= 1.0:
        raise ConfigError(
            f"grounding_threshold {config.grounding_threshold} outside [0, 1]"
        )
    if config.top_k < 1:
        raise ConfigError("top_k must be at least 1")
    if not 0 < config.listen_port < 65536:
        raise ConfigError(f"listen_port {config.listen_port} is invalid")
    for key in ("manual_dir", "lexicon_path", "template_dir"):
        value = getattr(config, key)
        if value is not None and not Path(value).exists():
            raise ConfigError(f"{key} path does not exist: {value}")


def load_config(
    path: str | Path | None = None, env: dict[str, str] | None = None
) -> ServiceConfig:
    """Load configuration; the JSON file wins over environment variables."""
    env = os.environ if env is None else env
    config = ServiceConfig()
    if env.get(ENV_CHAT_URL):
        config.chat_url = env[ENV_CHAT_URL]
    if env.get(ENV_EMBED_URL):
        config.embed_url = env[ENV_EMBED_URL]

    path = path or env.get(ENV_CONFIG)
    if path:
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"config file does not exist: {file_path}")
        try:
            raw = json.loads(file_path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
        unknown = set(raw) - _FIELD_NAMES
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in raw.items():
            setattr(config, key, value)

    _validate(config)
    return config
