"""HTTP sidecar exposing coreference and POS models over the resolver and
tagger wire protocols."""

from .app import create_app
from .config import AdapterConfig

__all__ = ["AdapterConfig", "create_app"]

__version__ = "0.1.0"
