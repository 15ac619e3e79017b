import itertools
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from longcoref.errors import TransportError
from longcoref.merge import GlobalCluster, GlobalMention
from longcoref.representative import (
    TaggedToken,
    is_pronoun_mention,
    select_representative,
    tag_pronouns,
    wire_tag,
)


def tag_map(text):
    return {text[t.start : t.end]: t.pos for t in tag_pronouns(text)}


class TestTagPronouns:
    def test_lexicon_hit(self):
        assert tag_map("She left") == {"She": "PRON", "left": "X"}

    def test_no_substring_matching(self):
        assert tag_map("Shelly left") == {"Shelly": "X", "left": "X"}

    def test_case_folds(self):
        assert tag_map("THEY ran")["THEY"] == "PRON"

    def test_covers_possessives_and_reflexives(self):
        tags = tag_map("her book is hers and she likes it herself")
        assert tags["her"] == "PRON"
        assert tags["hers"] == "PRON"
        assert tags["herself"] == "PRON"
        assert tags["book"] == "X"


class TestIsPronounMention:
    def make_tags(self, text):
        return tag_pronouns(text)

    def test_any_overlapping_pron_token(self):
        text = "she read her book today"
        tags = self.make_tags(text)
        # "her book" spans offsets 9..17
        assert is_pronoun_mention(9, 17, tags) is True

    def test_plain_name_is_not(self):
        text = "Alice read quietly"
        tags = self.make_tags(text)
        assert is_pronoun_mention(0, 5, tags) is False

    def test_span_with_no_tokens(self):
        tags = self.make_tags("a b")
        assert is_pronoun_mention(1, 2, tags) is False  # the space between


def build_cluster(spec):
    """spec: list of (surface, start). Returns cluster, mention map, tags."""
    mentions = {}
    members = []
    doc_parts = []
    for surface, start in spec:
        mid = (start, start + len(surface))
        mentions[mid] = GlobalMention(mid, surface, [0])
        members.append(mid)
    # tags: pronoun lexicon over each surface token, offsets global
    tags = []
    for surface, start in spec:
        offset = start
        for word in surface.split():
            from longcoref.resolver import PRONOUN_LEXICON

            pos = "PRON" if word.casefold() in PRONOUN_LEXICON else "X"
            tags.append(TaggedToken(offset, offset + len(word), pos))
            offset += len(word) + 1
    tags.sort(key=lambda t: t.start)
    return GlobalCluster(sorted(members)), mentions, tags


class TestSelectRepresentative:
    def test_frequency_beats_pronouns_and_tie_breaks_earliest(self):
        spec = (
            [("he", p) for p in (100, 120, 140, 160, 180)]
            + [("Dr. Smith", 10), ("Dr. Smith", 300)]
            + [("the doctor", 40), ("the doctor", 400)]
        )
        cluster, mentions, tags = build_cluster(spec)
        rep = select_representative(cluster, mentions, tags)
        assert mentions[rep].surface == "Dr. Smith"
        assert rep == (10, 19)

    def test_all_pronoun_cluster_has_no_representative(self):
        cluster, mentions, tags = build_cluster([("it", 0), ("they", 10)])
        assert select_representative(cluster, mentions, tags) is None

    def test_singleton(self):
        cluster, mentions, tags = build_cluster([("Rome", 5)])
        rep = select_representative(cluster, mentions, tags)
        assert mentions[rep].surface == "Rome"

    def test_normalization_groups_case_and_whitespace(self):
        spec = [("Dr.  Smith", 0), ("dr. smith", 50), ("Chancellor", 100)]
        cluster, mentions, tags = build_cluster(spec)
        rep = select_representative(cluster, mentions, tags)
        # the two smith variants normalize together: count 2 beats 1
        assert rep == (0, 10)

    def test_order_invariance(self):
        spec = [("Ada", 10), ("Ada", 50), ("Lovelace", 30), ("she", 70)]
        cluster, mentions, tags = build_cluster(spec)
        want = select_representative(cluster, mentions, tags)
        for perm in itertools.permutations(cluster.members):
            shuffled = GlobalCluster(list(perm))
            assert select_representative(shuffled, mentions, tags) == want

    def test_adding_pronoun_does_not_change_choice(self):
        spec = [("Ada", 10), ("Lovelace", 30)]
        cluster, mentions, tags = build_cluster(spec)
        base = select_representative(cluster, mentions, tags)

        spec2 = spec + [("she", 70)]
        cluster2, mentions2, tags2 = build_cluster(spec2)
        assert select_representative(cluster2, mentions2, tags2) == base


class _StubTagger(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        tokens = []
        pos = 0
        for word in body["text"].split():
            start = body["text"].index(word, pos)
            tokens.append(
                {"start": start, "end": start + len(word),
                 "pos": "PRON" if word.lower() == "she" else "NOUN"}
            )
            pos = start + len(word)
        data = json.dumps({"tokens": tokens}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class TestWireTagger:
    def test_round_trip(self):
        server = ThreadingHTTPServer(("127.0.0.1", 0), _StubTagger)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            url = f"http://127.0.0.1:{server.server_address[1]}/tag"
            tags = wire_tag("She slept", url)
            assert tags == [TaggedToken(0, 3, "PRON"), TaggedToken(4, 9, "NOUN")]
        finally:
            server.shutdown()

    def test_unreachable_raises(self):
        with pytest.raises(TransportError):
            wire_tag("text", "http://127.0.0.1:1/tag", timeout=0.2, retries=0)

    def test_tagger_backend_requires_endpoint(self):
        with pytest.raises(ValueError):
            tag_pronouns("text", "wire")
