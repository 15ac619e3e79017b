"""Prompt assembly, middle truncation, and the chat-completion client.

One OpenAI-compatible wire format covers every model family we target;
the client retries transient failures and sends temperature 0 so runs
are reproducible.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import requests

from .config import LlmConfig
from .errors import TransportError
from .segmenter import token_spans

log = logging.getLogger(__name__)

PROMPT_TEMPLATE_VERSION = "v1"

ELLIPSIS_MARKER = "…"

_COT_CUE = "Let's think step by step."
_OPEN_INSTRUCTION = "Answer the question using the context above. Keep the answer short."
_CHOICE_INSTRUCTION = "Answer with the letter only."


@dataclass(frozen=True)
class PromptSpec:
    mode: str  # vanilla | cot
    context: str
    question: str
    choices: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.question:
            raise ValueError("question must be non-empty")
        if self.mode not in ("vanilla", "cot"):
            raise ValueError(f"unknown prompt mode: {self.mode!r}")


def truncate_middle(text: str, max_tokens: int) -> str:
    """Keep the head and tail when ``text`` exceeds ``max_tokens``.

    The first ceil(max/2) and last floor(max/2) tokens survive, joined by
    a single ellipsis token, so the output never exceeds max_tokens + 1
    tokens and always preserves the original first and last tokens.
    """
    if max_tokens < 2:
        raise ValueError("max_tokens must be >= 2")
    toks = token_spans(text)
    if len(toks) <= max_tokens:
        return text
    head = (max_tokens + 1) // 2
    tail = max_tokens // 2
    head_end = toks[head - 1][1]
    tail_start = toks[len(toks) - tail][0]
    return f"{text[:head_end]} {ELLIPSIS_MARKER} {text[tail_start:]}"


def build_prompt(spec: PromptSpec) -> list[dict]:
    """Render the message sequence for a spec.

    The user message has two blank-line-separated parts: the context
    block, then the question block (choices as lettered lines, the
    step-by-step cue in cot mode, and the answer instruction).
    """
    question_lines = [f"Question: {spec.question}"]
    if spec.choices:
        for i, choice in enumerate(spec.choices):
            question_lines.append(f"{chr(ord('A') + i)}. {choice}")
    if spec.mode == "cot":
        question_lines.append(_COT_CUE)
    question_lines.append(_CHOICE_INSTRUCTION if spec.choices else _OPEN_INSTRUCTION)
    content = f"Context:\n{spec.context}\n\n" + "\n".join(question_lines)
    return [{"role": "user", "content": content}]


@dataclass
class ChatClient:
    """Minimal OpenAI-compatible chat-completion client with retries."""

    config: LlmConfig
    session: requests.Session = field(default_factory=requests.Session)

    def complete(self, messages: list[dict]) -> str:
        cfg = self.config.validate()
        headers = {"Content-Type": "application/json"}
        key = cfg.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = cfg.endpoint.rstrip("/") + "/chat/completions"
        body = {"model": cfg.model, "messages": messages, "temperature": cfg.temperature}
        last: str | Exception = "no attempt made"
        for attempt in range(cfg.retries + 1):
            if attempt and cfg.backoff:
                time.sleep(cfg.backoff * attempt)
            try:
                resp = self.session.post(url, json=body, headers=headers, timeout=cfg.timeout)
            except requests.RequestException as exc:
                last = exc
                log.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code in (429,) or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}: {resp.text[:200]}"
                log.warning("chat request retryable failure (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code != 200:
                raise TransportError(
                    f"chat endpoint returned {resp.status_code}: {resp.text[:500]}", stage="qa"
                )
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed chat response: {exc}", stage="qa") from exc
        raise TransportError(
            f"chat endpoint failed after {cfg.retries + 1} attempts: {last}", stage="qa"
        )


class MockChatClient:
    """In-process stand-in used by tests and offline runs.

    ``reply_fn`` receives the message list and returns the reply text;
    the default echoes the last user message so wiring can be asserted.
    """

    def __init__(self, reply_fn=None):
        self.reply_fn = reply_fn or (lambda messages: messages[-1]["content"])
        self.calls: list[list[dict]] = []

    def complete(self, messages: list[dict]) -> str:
        self.calls.append(messages)
        return self.reply_fn(messages)
