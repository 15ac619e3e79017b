"""Dataclass configs plus INI config-file loading.

Precedence everywhere: explicit flags > config file > dataclass
defaults.  The file format is INI with [pipeline] and [llm] sections;
every field has a matching CLI flag.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class PipelineConfig:
    max_chunk_tokens: int = 512
    threshold: float = 0.9
    chunk_mode: str = "sliding"  # sliding | non_overlap
    resolver: str = "builtin"  # builtin | wire | llm
    resolver_endpoint: str | None = None
    tagger: str = "builtin"  # builtin | wire
    tagger_endpoint: str | None = None
    parallelism: int = 1
    timeout: float = 30.0
    retries: int = 2

    def validate(self) -> "PipelineConfig":
        if self.max_chunk_tokens < 1:
            raise ConfigError("max_chunk_tokens must be >= 1")
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError("threshold must be within [0, 1]")
        if self.chunk_mode not in ("sliding", "non_overlap"):
            raise ConfigError(f"unknown chunk mode: {self.chunk_mode!r}")
        if self.resolver not in ("builtin", "wire", "llm"):
            raise ConfigError(f"unknown resolver backend: {self.resolver!r}")
        if self.resolver == "wire" and not self.resolver_endpoint:
            raise ConfigError("resolver=wire requires --resolver-endpoint")
        if self.tagger not in ("builtin", "wire"):
            raise ConfigError(f"unknown tagger backend: {self.tagger!r}")
        if self.tagger == "wire" and not self.tagger_endpoint:
            raise ConfigError("tagger=wire requires --tagger-endpoint")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        return self


@dataclass
class LlmConfig:
    endpoint: str | None = None
    model: str = "gpt-4o-mini"
    max_context_tokens: int = 120_000
    temperature: float = 0.0
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 120.0
    retries: int = 2
    backoff: float = 1.0

    def validate(self) -> "LlmConfig":
        if not self.endpoint:
            raise ConfigError("an LLM endpoint is required (--endpoint)")
        if self.max_context_tokens < 2:
            raise ConfigError("max_context_tokens must be >= 2")
        return self

    def api_key(self) -> str:
        if not self.api_key_env:
            return ""
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigError(
                f"missing API key: set ${self.api_key_env} (or api_key_env= to disable)"
            )
        return key


def _coerce(value: str, target_type):
    if target_type is bool:
        return value.lower() in ("1", "true", "yes", "on")
    return target_type(value)


def load_config_file(path: str) -> tuple[dict, dict]:
    """Read [pipeline] and [llm] sections into raw override dicts."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not readable: {path}")
    out: dict[str, dict] = {"pipeline": {}, "llm": {}}
    field_types = {
        "pipeline": {f.name: f for f in dataclasses.fields(PipelineConfig)},
        "llm": {f.name: f for f in dataclasses.fields(LlmConfig)},
    }
    for section in ("pipeline", "llm"):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            fld = field_types[section].get(key)
            if fld is None:
                raise ConfigError(f"unknown key {key!r} in [{section}] of {path}")
            base = {"max_chunk_tokens": int, "parallelism": int, "retries": int,
                    "max_context_tokens": int}.get(key)
            if base is None:
                base = {"threshold": float, "timeout": float, "temperature": float,
                        "backoff": float}.get(key, str)
            if raw == "" and base is not str:
                continue  # a blank number means "leave the default"
            try:
                out[section][key] = _coerce(raw, base)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r} in {path}: {raw!r}") from exc
    return out["pipeline"], out["llm"]


def merge_config(cls, file_overrides: dict, flag_overrides: dict):
    """Defaults <- file <- flags (None flags are 'not given')."""
    values = {}
    values.update(file_overrides)
    values.update({k: v for k, v in flag_overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return cls(**values)
