"""Chunk-local mention detection and coreference clustering.

Three interchangeable backends produce the same shape of result:

* ``builtin``  - deterministic rules, no dependencies (the default and
  the test oracle for the rest of the pipeline),
* ``wire``     - an external model server speaking the HTTP protocol
  documented in :func:`wire_resolve`,
* ``llm``      - a chat-completion model prompted for structured output.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import requests

from .errors import IntegrityError, TransportError
from .segmenter import split_sentences, token_spans

log = logging.getLogger(__name__)

#: Case-folded forms treated as pronouns by the builtin resolver and the
#: builtin tagger.
PRONOUN_LEXICON = frozenset(
    """he she it they him her them his hers its their theirs i you we me us
    this that these those who whom which himself herself itself themselves
    myself yourself ourselves""".split()
)


@dataclass(frozen=True)
class LocalMention:
    """A mention span relative to its chunk."""

    start: int
    end: int
    surface: str


@dataclass
class LocalClustering:
    """Mentions and disjoint cluster index lists for one chunk."""

    chunk_index: int
    mentions: list[LocalMention] = field(default_factory=list)
    clusters: list[list[int]] = field(default_factory=list)


def resolve_chunk(
    chunk_text: str,
    chunk_index: int = 0,
    backend: str = "builtin",
    *,
    endpoint: str | None = None,
    llm_client=None,
    timeout: float = 30.0,
    retries: int = 2,
) -> LocalClustering:
    """Resolve one chunk with the selected backend and validate the result."""
    if backend == "builtin":
        return builtin_resolve(chunk_text, chunk_index)
    if backend == "wire":
        if not endpoint:
            raise ValueError("wire backend requires an endpoint")
        return wire_resolve(chunk_text, chunk_index, endpoint, timeout=timeout, retries=retries)
    if backend == "llm":
        if llm_client is None:
            raise ValueError("llm backend requires a chat client")
        return llm_resolve(chunk_text, chunk_index, llm_client)
    raise ValueError(f"unknown resolver backend: {backend!r}")


# ---------------------------------------------------------------------------
# builtin rules
# ---------------------------------------------------------------------------


def builtin_resolve(chunk_text: str, chunk_index: int = 0) -> LocalClustering:
    """Rule-based resolver.

    Mentions are (a) pronouns from :data:`PRONOUN_LEXICON` and (b) maximal
    runs of adjacent capitalized non-pronoun tokens.  A single capitalized
    token that opens a sentence is kept only when the chunk gives no
    evidence it is an ordinary word, i.e. the same form never occurs in
    lowercase elsewhere in the chunk; multi-token runs always count.

    Clusters: non-pronoun mentions with the same case-folded surface are
    merged, and each pronoun joins the nearest non-pronoun mention that
    starts before it (pronouns never anchor to other pronouns).  Every
    mention lands in exactly one cluster; singletons are kept.
    """
    toks = token_spans(chunk_text)
    sentences = split_sentences(chunk_text)
    sentence_first_token: set[int] = set()
    si = 0
    for ti, (ts, _te) in enumerate(toks):
        while si < len(sentences) and ts >= sentences[si].end:
            si += 1
        if si < len(sentences) and ts == sentences[si].start:
            sentence_first_token.add(ti)

    words = [chunk_text[s:e] for s, e in toks]
    lowercase_forms = {w.casefold() for w in words if w and w[0].isalpha() and not w[0].isupper()}

    def is_pron(i: int) -> bool:
        return words[i].casefold() in PRONOUN_LEXICON

    def is_cap(i: int) -> bool:
        return bool(words[i]) and words[i][0].isalpha() and words[i][0].isupper()

    mentions: list[LocalMention] = []
    pronoun_flags: list[bool] = []
    i = 0
    while i < len(toks):
        if is_pron(i):
            s, e = toks[i]
            mentions.append(LocalMention(s, e, chunk_text[s:e]))
            pronoun_flags.append(True)
            i += 1
            continue
        if is_cap(i):
            j = i
            while (
                j + 1 < len(toks)
                and is_cap(j + 1)
                and not is_pron(j + 1)
                and chunk_text[toks[j][1] : toks[j + 1][0]].isspace()
            ):
                j += 1
            keep = True
            if j == i and i in sentence_first_token and words[i].casefold() in lowercase_forms:
                keep = False
            if keep:
                s, e = toks[i][0], toks[j][1]
                mentions.append(LocalMention(s, e, chunk_text[s:e]))
                pronoun_flags.append(False)
            i = j + 1
            continue
        i += 1

    order = sorted(range(len(mentions)), key=lambda k: (mentions[k].start, mentions[k].end))
    mentions = [mentions[k] for k in order]
    pronoun_flags = [pronoun_flags[k] for k in order]

    parent = list(range(len(mentions)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    by_surface: dict[str, int] = {}
    for idx, m in enumerate(mentions):
        if pronoun_flags[idx]:
            continue
        key = m.surface.casefold()
        if key in by_surface:
            union(by_surface[key], idx)
        else:
            by_surface[key] = idx

    for idx, m in enumerate(mentions):
        if not pronoun_flags[idx]:
            continue
        antecedent = None
        for q in range(idx - 1, -1, -1):
            if not pronoun_flags[q]:
                antecedent = q
                break
        if antecedent is not None:
            union(idx, antecedent)

    groups: dict[int, list[int]] = {}
    for idx in range(len(mentions)):
        groups.setdefault(find(idx), []).append(idx)
    clusters = sorted(groups.values(), key=lambda g: g[0])
    return LocalClustering(chunk_index, mentions, clusters)


# ---------------------------------------------------------------------------
# wire protocol
# ---------------------------------------------------------------------------


def wire_resolve(
    chunk_text: str,
    chunk_index: int,
    endpoint: str,
    *,
    timeout: float = 30.0,
    retries: int = 2,
    session: requests.Session | None = None,
) -> LocalClustering:
    """POST ``{"chunk_id", "text"}`` to ``endpoint`` and validate the reply.

    The reply must be ``{"mentions": [{"start", "end"}], "clusters": [[int]]}``
    with offsets in unicode code points.
    """
    sess = session or requests
    payload = {"chunk_id": chunk_index, "text": chunk_text}
    last_exc: Exception | None = None
    for _attempt in range(retries + 1):
        try:
            resp = sess.post(endpoint, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code >= 500:
            last_exc = TransportError(
                f"resolver returned {resp.status_code}: {resp.text[:200]}",
                stage="resolve",
                chunk_index=chunk_index,
            )
            continue
        if resp.status_code != 200:
            raise TransportError(
                f"resolver returned {resp.status_code}: {resp.text[:200]}",
                stage="resolve",
                chunk_index=chunk_index,
            )
        try:
            body = resp.json()
            raw_mentions = [(int(m["start"]), int(m["end"])) for m in body["mentions"]]
            raw_clusters = [[int(i) for i in c] for c in body["clusters"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(
                f"malformed resolver response: {exc}", stage="resolve", chunk_index=chunk_index
            ) from exc
        return _validated(chunk_text, chunk_index, raw_mentions, raw_clusters)
    raise TransportError(
        f"resolver unreachable after {retries + 1} attempts: {last_exc}",
        stage="resolve",
        chunk_index=chunk_index,
    )


# ---------------------------------------------------------------------------
# LLM backend
# ---------------------------------------------------------------------------

_LLM_INSTRUCTIONS = """\
Find every mention in the text below (pronouns, nouns, noun phrases and \
modifiers) and group the mentions that refer to the same entity.

Reply with JSON only, no prose, in exactly this shape:
{"mentions": [{"start": <int>, "end": <int>}], "clusters": [[<mention index>]]}

Offsets are unicode character positions into the text, end exclusive. \
Each cluster lists indexes into "mentions"; a mention may appear in at \
most one cluster.

Text:
"""


def llm_resolve(chunk_text: str, chunk_index: int, client) -> LocalClustering:
    """Ask a chat model for mention spans and cluster groupings.

    An unparsable reply degrades to zero clusters with a logged warning;
    individual invalid spans are dropped and the rest kept.
    """
    messages = [{"role": "user", "content": _LLM_INSTRUCTIONS + chunk_text}]
    reply = client.complete(messages)
    try:
        body = json.loads(_extract_json(reply))
        raw_mentions = [(int(m["start"]), int(m["end"])) for m in body.get("mentions", [])]
        raw_clusters = [[int(i) for i in c] for c in body.get("clusters", [])]
    except (ValueError, KeyError, TypeError) as exc:
        log.warning("chunk %d: unparsable resolver reply (%s); treating as empty", chunk_index, exc)
        return LocalClustering(chunk_index, [], [])
    return _validated(chunk_text, chunk_index, raw_mentions, raw_clusters, drop_invalid=True)


def _extract_json(reply: str) -> str:
    """Tolerate code fences and surrounding prose around a JSON object."""
    start = reply.find("{")
    end = reply.rfind("}")
    if start < 0 or end < start:
        raise ValueError("no JSON object in reply")
    return reply[start : end + 1]


# ---------------------------------------------------------------------------
# shared validation
# ---------------------------------------------------------------------------


def _validated(
    chunk_text: str,
    chunk_index: int,
    raw_mentions: list[tuple[int, int]],
    raw_clusters: list[list[int]],
    *,
    drop_invalid: bool = False,
) -> LocalClustering:
    """Normalize backend output: bad spans dropped (or rejected), duplicate
    spans collapsed, cluster lists remapped and made disjoint."""
    index_map: dict[int, int] = {}
    seen: dict[tuple[int, int], int] = {}
    mentions: list[LocalMention] = []
    for old_idx, (s, e) in enumerate(raw_mentions):
        if not (0 <= s < e <= len(chunk_text)):
            if drop_invalid:
                log.warning("chunk %d: dropping out-of-range span (%d, %d)", chunk_index, s, e)
                continue
            raise IntegrityError(f"chunk {chunk_index}: mention span ({s}, {e}) out of range")
        if (s, e) in seen:
            index_map[old_idx] = seen[(s, e)]
            continue
        seen[(s, e)] = len(mentions)
        index_map[old_idx] = len(mentions)
        mentions.append(LocalMention(s, e, chunk_text[s:e]))

    assigned: set[int] = set()
    clusters: list[list[int]] = []
    for raw in raw_clusters:
        cluster: list[int] = []
        for old_idx in raw:
            new_idx = index_map.get(old_idx)
            if new_idx is None or new_idx in assigned or new_idx in cluster:
                continue
            cluster.append(new_idx)
        if cluster:
            assigned.update(cluster)
            clusters.append(sorted(cluster))
    return LocalClustering(chunk_index, mentions, clusters)
