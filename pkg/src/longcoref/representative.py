"""Pronoun tagging and representative-mention selection.

A cluster's representative is its most frequent non-pronoun surface
form; ties go to the surface seen earliest in the document, and the
earliest instance of the winning surface is returned.  Clusters made of
pronouns only get no representative and are left untouched downstream.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import requests

from .errors import TransportError
from .merge import GlobalCluster, GlobalMention, MentionId
from .resolver import PRONOUN_LEXICON
from .segmenter import token_spans


@dataclass(frozen=True)
class TaggedToken:
    start: int
    end: int
    pos: str  # "PRON" or "X" from the builtin tagger; wire taggers may say more


def tag_pronouns(
    text: str,
    backend: str = "builtin",
    *,
    endpoint: str | None = None,
    timeout: float = 30.0,
    retries: int = 2,
) -> list[TaggedToken]:
    """Tag every token, marking pronouns as PRON.

    The builtin backend case-folds each token against the fixed pronoun
    lexicon (no substring matching, so "Shelly" stays X).  The wire
    backend delegates to the tagger protocol.
    """
    if backend == "builtin":
        return [
            TaggedToken(s, e, "PRON" if text[s:e].casefold() in PRONOUN_LEXICON else "X")
            for s, e in token_spans(text)
        ]
    if backend == "wire":
        if not endpoint:
            raise ValueError("wire backend requires an endpoint")
        return wire_tag(text, endpoint, timeout=timeout, retries=retries)
    raise ValueError(f"unknown tagger backend: {backend!r}")


def wire_tag(
    text: str,
    endpoint: str,
    *,
    timeout: float = 30.0,
    retries: int = 2,
    session: requests.Session | None = None,
) -> list[TaggedToken]:
    """POST ``{"text"}``; expect ``{"tokens": [{"start", "end", "pos"}]}``."""
    sess = session or requests
    last_exc: Exception | None = None
    for _attempt in range(retries + 1):
        try:
            resp = sess.post(endpoint, json={"text": text}, timeout=timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code >= 500:
            last_exc = TransportError(f"tagger returned {resp.status_code}", stage="tag")
            continue
        if resp.status_code != 200:
            raise TransportError(
                f"tagger returned {resp.status_code}: {resp.text[:200]}", stage="tag"
            )
        try:
            body = resp.json()
            return [
                TaggedToken(int(t["start"]), int(t["end"]), str(t["pos"]))
                for t in body["tokens"]
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"malformed tagger response: {exc}", stage="tag") from exc
    raise TransportError(f"tagger unreachable after {retries + 1} attempts: {last_exc}", stage="tag")


def is_pronoun_mention(start: int, end: int, tags: list[TaggedToken]) -> bool:
    """True iff any tagged token overlapping [start, end) is PRON.

    ``tags`` must be sorted by start (taggers emit them in order).
    """
    i = bisect_left(tags, start + 1, key=lambda t: t.end)
    while i < len(tags) and tags[i].start < end:
        if tags[i].end > start and tags[i].pos == "PRON":
            return True
        i += 1
    return False


def normalize_surface(surface: str) -> str:
    return " ".join(surface.split()).casefold()


def select_representative(
    cluster: GlobalCluster,
    mentions_by_id: dict[MentionId, GlobalMention],
    tags: list[TaggedToken],
) -> MentionId | None:
    """Pick the cluster's representative mention, or None if every member
    is a pronoun."""
    groups: dict[str, list[MentionId]] = {}
    for mid in cluster.members:
        if is_pronoun_mention(mid[0], mid[1], tags):
            continue
        key = normalize_surface(mentions_by_id[mid].surface)
        groups.setdefault(key, []).append(mid)
    if not groups:
        return None
    best_key = max(groups, key=lambda k: (len(groups[k]), -min(groups[k])[0], -min(groups[k])[1]))
    return min(groups[best_key])


def select_representatives(
    clusters: list[GlobalCluster],
    mentions: list[GlobalMention],
    tags: list[TaggedToken],
) -> None:
    """Fill ``representative`` on every cluster in place."""
    by_id = {m.id: m for m in mentions}
    for cluster in clusters:
        cluster.representative = select_representative(cluster, by_id, tags)
