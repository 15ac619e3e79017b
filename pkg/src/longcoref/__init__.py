"""Coreference-based rewriting of long documents for question answering.

The pipeline splits a document into sentence-aligned chunks, resolves
coreference inside each chunk, merges the chunk-local clusters into
document-global ones through pair-agreement distances and max-product
path propagation, replaces every mention with its cluster's
representative, and feeds the rewritten text to a QA model.
"""

from .config import LlmConfig, PipelineConfig
from .errors import ConfigError, IntegrityError, LongcorefError, TransportError
from .pipeline import PipelineResult, analyze_document, rewrite_document

__all__ = [
    "ConfigError",
    "IntegrityError",
    "LlmConfig",
    "LongcorefError",
    "PipelineConfig",
    "PipelineResult",
    "TransportError",
    "analyze_document",
    "rewrite_document",
]

__version__ = "0.1.0"
