"""Sentence segmentation and sentence-aligned chunking.

Everything downstream (chunk budgets, stride, truncation) counts tokens
with the same deterministic rule: split on whitespace, then peel leading
and trailing punctuation characters off each piece as tokens of their
own.  No model tokenizer is involved, so results are stable across
machines and runs.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass

from .errors import IntegrityError

# ASCII punctuation plus the common typographic marks that show up in
# copied prose.
_PUNCT = set(string.punctuation) | set("–—‘’“”…")

_TERMINATORS = ".!?"

# Fixed guard list: a candidate break after "." is suppressed when the
# word ending at it case-folds to one of these.
ABBREVIATIONS = frozenset(
    {
        "dr.",
        "mr.",
        "mrs.",
        "ms.",
        "prof.",
        "e.g.",
        "i.e.",
        "etc.",
        "vs.",
        "fig.",
        "eq.",
        "no.",
        "u.s.",
    }
)

_WORD_RE = re.compile(r"\S+")


def token_spans(text: str) -> list[tuple[int, int]]:
    """Return (start, end) character spans of tokens in ``text``.

    A whitespace-delimited piece yields its leading punctuation
    characters, its core, and its trailing punctuation characters as
    separate tokens; internal punctuation stays attached ("don't" is a
    single token, "(word)." is four).
    """
    spans: list[tuple[int, int]] = []
    for m in _WORD_RE.finditer(text):
        piece = m.group()
        base = m.start()
        i, j = 0, len(piece)
        while i < j and piece[i] in _PUNCT:
            spans.append((base + i, base + i + 1))
            i += 1
        trailing: list[tuple[int, int]] = []
        while j > i and piece[j - 1] in _PUNCT:
            trailing.append((base + j - 1, base + j))
            j -= 1
        if i < j:
            spans.append((base + i, base + j))
        spans.extend(reversed(trailing))
    return spans


def count_tokens(text: str) -> int:
    return len(token_spans(text))


@dataclass(frozen=True)
class SentenceSpan:
    """One sentence: character span plus its token count."""

    index: int
    start: int
    end: int
    token_count: int


@dataclass(frozen=True)
class Chunk:
    """A sentence-aligned window of the document.

    ``sentences`` holds the inclusive (first, last) sentence indices.
    ``start``/``end`` are global character offsets; the first chunk is
    anchored at 0 and every chunk extends to the next chunk's start (or
    the document end), so the chunk set covers every character and
    non-overlapping chunks tile the document exactly.
    ``hard_split`` marks chunks containing a forced mid-sentence cut.
    """

    index: int
    sentences: tuple[int, int]
    start: int
    end: int
    token_count: int
    hard_split: bool = False


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split ``text`` into sentence spans.

    A sentence ends at a run of ``.!?`` followed by whitespace or the end
    of input, unless the word ending there is in :data:`ABBREVIATIONS`.
    Trailing text without a terminator becomes a final sentence.  Empty
    or whitespace-only input yields an empty list.
    """
    spans: list[SentenceSpan] = []
    n = len(text)
    pos = 0
    while pos < n:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        start = pos
        end = None
        j = pos
        while j < n:
            if text[j] in _TERMINATORS:
                k = j
                while k + 1 < n and text[k + 1] in _TERMINATORS:
                    k += 1
                if k + 1 >= n or text[k + 1].isspace():
                    if not _abbreviation_guard(text, k):
                        end = k + 1
                        break
                j = k + 1
            else:
                j += 1
        if end is None:
            # Unterminated tail; trim trailing whitespace.
            end = n
            while end > start and text[end - 1].isspace():
                end -= 1
        tokens = count_tokens(text[start:end])
        spans.append(SentenceSpan(len(spans), start, end, tokens))
        pos = end
    return spans


def _abbreviation_guard(text: str, term_index: int) -> bool:
    """True when the terminator at ``term_index`` ends a guarded abbreviation."""
    if text[term_index] != ".":
        return False
    w = term_index
    while w > 0 and not text[w - 1].isspace():
        w -= 1
    word = text[w : term_index + 1]
    return word.casefold() in ABBREVIATIONS or word.lstrip("\"'([{").casefold() in ABBREVIATIONS


# Internal chunking unit: a sentence or a forced slice of one.
@dataclass(frozen=True)
class _Unit:
    sentence_index: int
    start: int
    end: int
    token_count: int
    forced: bool


def _units(text: str, sentences: list[SentenceSpan], max_tokens: int) -> list[_Unit]:
    """Sentences as chunking units; oversized ones hard-split at token
    boundaries into consecutive pseudo-sentences of at most ``max_tokens``."""
    units: list[_Unit] = []
    for s in sentences:
        if s.token_count <= max_tokens:
            units.append(_Unit(s.index, s.start, s.end, s.token_count, False))
            continue
        toks = token_spans(text[s.start : s.end])
        for off in range(0, len(toks), max_tokens):
            part = toks[off : off + max_tokens]
            u_start = s.start + (part[0][0] if off else 0)
            u_end = s.start + part[-1][1] if off + max_tokens < len(toks) else s.end
            units.append(_Unit(s.index, u_start, u_end, len(part), True))
    return units


def chunk_document(
    text: str,
    sentences: list[SentenceSpan],
    max_tokens: int,
    mode: str = "sliding",
) -> list[Chunk]:
    """Assemble sentence-aligned chunks bounded by ``max_tokens``.

    Each chunk starts at a sentence start and greedily extends to the
    last sentence that keeps the token total within budget; a sentence
    that would overflow is excluded whole.  In ``sliding`` mode the next
    chunk starts at the first sentence whose cumulative start-token index
    reaches the previous start plus ``max_tokens // 2``, clamped to the
    sentence right after the previous chunk so no sentence is skipped.
    In ``non_overlap`` mode chunks tile the sentence list.  Windows stop
    once a chunk reaches the final sentence.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    if mode not in ("sliding", "non_overlap"):
        raise ValueError(f"unknown chunk mode: {mode!r}")
    if not sentences:
        raise ValueError("sentences must be non-empty")

    units = _units(text, sentences, max_tokens)
    start_tok = [0] * len(units)
    for i in range(1, len(units)):
        start_tok[i] = start_tok[i - 1] + units[i - 1].token_count

    stride = max_tokens // 2
    raw: list[tuple[int, int]] = []  # (first_unit, last_unit)
    first = 0
    while first < len(units):
        total = units[first].token_count
        last = first
        while last + 1 < len(units) and total + units[last + 1].token_count <= max_tokens:
            last += 1
            total += units[last].token_count
        raw.append((first, last))
        if last == len(units) - 1:
            break
        if mode == "non_overlap":
            first = last + 1
        else:
            target = start_tok[first] + stride
            nxt = first + 1
            while nxt < len(units) and start_tok[nxt] < target:
                nxt += 1
            first = min(max(nxt, first + 1), last + 1)

    chunks: list[Chunk] = []
    for ci, (first, last) in enumerate(raw):
        start = 0 if ci == 0 else units[first].start
        if ci + 1 < len(raw):
            nxt_start = units[raw[ci + 1][0]].start
            end = max(units[last].end, nxt_start) if mode == "sliding" else nxt_start
        else:
            end = len(text)
        chunks.append(
            Chunk(
                index=ci,
                sentences=(units[first].sentence_index, units[last].sentence_index),
                start=start,
                end=end,
                token_count=sum(u.token_count for u in units[first : last + 1]),
                hard_split=any(u.forced for u in units[first : last + 1]),
            )
        )
    _check_chunks(text, chunks, mode)
    return chunks


def _check_chunks(text: str, chunks: list[Chunk], mode: str) -> None:
    if chunks[0].start != 0 or chunks[-1].end != len(text):
        raise IntegrityError("chunks do not cover the document")
    for a, b in zip(chunks, chunks[1:]):
        if b.start <= a.start:
            raise IntegrityError("chunk starts are not strictly increasing")
        if mode == "non_overlap" and b.start != a.end:
            raise IntegrityError("non_overlap chunks must tile the document")
        if mode == "sliding" and b.start > a.end:
            raise IntegrityError("sliding chunks left a gap")
