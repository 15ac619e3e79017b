"""Exception hierarchy shared across the pipeline.

Each class maps to one CLI exit code so scripted callers can branch on
failure kind without parsing messages.
"""


class LongcorefError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(LongcorefError):
    """Bad flag/config-file values, missing credentials, unusable inputs."""

    exit_code = 2


class TransportError(LongcorefError):
    """A remote backend (resolver, tagger, LLM) could not be reached or
    kept failing after the configured retries."""

    exit_code = 3

    def __init__(self, message, *, stage=None, chunk_index=None):
        if chunk_index is not None:
            message = f"{message} (chunk {chunk_index})"
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage
        self.chunk_index = chunk_index


class IntegrityError(LongcorefError):
    """Data violated an internal contract (spans out of bounds,
    overlapping edits reaching the splicer, ...)."""

    exit_code = 4
