"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class AdapterConfig:
    """Service settings.

    ``max_input_length`` (code points) must be at least the chunk token
    budget of any pipeline that will call this adapter, or chunk requests
    will bounce with 413.
    """

    resolver_backend: str = "rule"  # rule | maverick
    tagger_backend: str = "rule"  # rule | spacy
    resolver_model: str = "sapienzanlp/maverick-mes-ontonotes"
    tagger_model: str = "en_core_web_sm"
    device: str = "cpu"
    max_input_length: int = 8192
    port: int = 8762

    def validate(self) -> "AdapterConfig":
        if self.max_input_length < 1:
            raise ValueError("max_input_length must be >= 1")
        if self.resolver_backend not in ("rule", "maverick"):
            raise ValueError(f"unknown resolver backend: {self.resolver_backend!r}")
        if self.tagger_backend not in ("rule", "spacy"):
            raise ValueError(f"unknown tagger backend: {self.tagger_backend!r}")
        return self
