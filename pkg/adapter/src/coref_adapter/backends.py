"""Model backends behind the wire protocols.

Every backend returns code-point offsets into the request text; helpers
at the bottom convert byte- or token-level offsets coming out of real
models.  The ``rule`` backends are dependency-free deterministic
stand-ins so the service (and anything integrating against it) can run
without model weights; the ``maverick`` and ``spacy`` backends wrap the
real models and import them lazily.
"""

from __future__ import annotations

import re
import string

_WORD = re.compile(r"\S+")
_EDGE_PUNCT = set(string.punctuation)

PRONOUNS = frozenset(
    """he she it they him her them his hers its their theirs i you we me us
    this that these those who whom which himself herself itself themselves
    myself yourself ourselves""".split()
)


def _tokens(text: str) -> list[tuple[int, int]]:
    spans = []
    for m in _WORD.finditer(text):
        s, e = m.start(), m.end()
        while s < e and text[s] in _EDGE_PUNCT:
            spans.append((s, s + 1))
            s += 1
        trail = []
        while e > s and text[e - 1] in _EDGE_PUNCT:
            trail.append((e - 1, e))
            e -= 1
        if s < e:
            spans.append((s, e))
        spans.extend(reversed(trail))
    return spans


class RuleResolver:
    """Capitalized-run and pronoun heuristics; deterministic."""

    name = "rule"

    def resolve(self, text: str) -> tuple[list[tuple[int, int]], list[list[int]]]:
        toks = _tokens(text)
        words = [text[s:e] for s, e in toks]
        mentions: list[tuple[int, int]] = []
        is_pron: list[bool] = []
        i = 0
        while i < len(toks):
            w = words[i]
            if w.casefold() in PRONOUNS:
                mentions.append(toks[i])
                is_pron.append(True)
                i += 1
                continue
            if w[:1].isalpha() and w[:1].isupper():
                j = i
                while (
                    j + 1 < len(toks)
                    and words[j + 1][:1].isalpha()
                    and words[j + 1][:1].isupper()
                    and words[j + 1].casefold() not in PRONOUNS
                    and text[toks[j][1] : toks[j + 1][0]].isspace()
                ):
                    j += 1
                mentions.append((toks[i][0], toks[j][1]))
                is_pron.append(False)
                i = j + 1
                continue
            i += 1

        parent = list(range(len(mentions)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        by_surface: dict[str, int] = {}
        for idx, (s, e) in enumerate(mentions):
            if is_pron[idx]:
                continue
            key = text[s:e].casefold()
            if key in by_surface:
                union(by_surface[key], idx)
            else:
                by_surface[key] = idx
        for idx in range(len(mentions)):
            if not is_pron[idx]:
                continue
            for q in range(idx - 1, -1, -1):
                if not is_pron[q]:
                    union(idx, q)
                    break

        groups: dict[int, list[int]] = {}
        for idx in range(len(mentions)):
            groups.setdefault(find(idx), []).append(idx)
        clusters = sorted(groups.values(), key=lambda g: g[0])
        return mentions, clusters


class RuleTagger:
    """Lexicon tagger: PRON for pronoun forms, X otherwise."""

    name = "rule"

    def tag(self, text: str) -> list[tuple[int, int, str]]:
        return [
            (s, e, "PRON" if text[s:e].casefold() in PRONOUNS else "X")
            for s, e in _tokens(text)
        ]


class MaverickResolver:
    """Wraps the maverick coreference model; requires the `maverick-coref`
    package and downloaded weights."""

    name = "maverick"

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            from maverick import Maverick
        except ImportError as exc:  # pragma: no cover - model env only
            raise RuntimeError(
                "maverick backend requires the maverick-coref package"
            ) from exc
        self._model = Maverick(hf_name_or_path=model_id, device=device)

    def resolve(self, text: str):  # pragma: no cover - model env only
        out = self._model.predict(text)
        # model emits token-level cluster offsets plus the token list;
        # map them back to code-point spans of the request text
        token_spans = _align_tokens(text, out["tokens"])
        mentions: list[tuple[int, int]] = []
        clusters: list[list[int]] = []
        index: dict[tuple[int, int], int] = {}
        for cluster in out["clusters_token_offsets"]:
            members = []
            for t_start, t_end in cluster:
                span = (token_spans[t_start][0], token_spans[t_end][1])
                if span not in index:
                    index[span] = len(mentions)
                    mentions.append(span)
                members.append(index[span])
            clusters.append(sorted(set(members)))
        return mentions, clusters


class SpacyTagger:
    """Wraps a spaCy pipeline for POS tags; upos PRON passes through."""

    name = "spacy"

    def __init__(self, model_id: str):
        try:
            import spacy
        except ImportError as exc:  # pragma: no cover - model env only
            raise RuntimeError("spacy backend requires the spacy package") from exc
        self._nlp = spacy.load(model_id, disable=["parser", "ner", "lemmatizer"])

    def tag(self, text: str):  # pragma: no cover - model env only
        doc = self._nlp(text)
        return [(t.idx, t.idx + len(t.text), t.pos_) for t in doc if not t.is_space]


def _align_tokens(text: str, tokens: list[str]) -> list[tuple[int, int]]:
    """Locate each model token in the original text, left to right."""
    spans = []
    pos = 0
    for tok in tokens:
        found = text.find(tok, pos)
        if found < 0:
            raise RuntimeError(f"model token {tok!r} not found in request text")
        spans.append((found, found + len(tok)))
        pos = found + len(tok)
    return spans


def byte_to_codepoint_offsets(text: str, spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Convert UTF-8 byte spans (common in model outputs) to code points.

    The wire protocol fixes code points; backends whose models report
    byte offsets must convert before responding.
    """
    encoded = text.encode("utf-8")
    byte_to_cp = {}
    byte_pos = 0
    for cp_pos, ch in enumerate(text):
        byte_to_cp[byte_pos] = cp_pos
        byte_pos += len(ch.encode("utf-8"))
    byte_to_cp[byte_pos] = len(text)
    out = []
    for s, e in spans:
        if s not in byte_to_cp or e not in byte_to_cp:
            raise ValueError(f"byte span ({s}, {e}) does not fall on character boundaries")
        out.append((byte_to_cp[s], byte_to_cp[e]))
    assert len(encoded) == byte_pos
    return out


def make_resolver(config):
    if config.resolver_backend == "rule":
        return RuleResolver()
    return MaverickResolver(config.resolver_model, config.device)


def make_tagger(config):
    if config.tagger_backend == "rule":
        return RuleTagger()
    return SpacyTagger(config.tagger_model)
