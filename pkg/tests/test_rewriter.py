import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longcoref.errors import IntegrityError
from longcoref.merge import GlobalCluster, GlobalMention
from longcoref.rewriter import Edit, apply_edits, plan_edits


def make_world(doc, cluster_specs):
    """cluster_specs: list of (members, representative) with spans."""
    mentions = []
    clusters = []
    for members, rep in cluster_specs:
        ids = []
        for s, e in members:
            mid = (s, e)
            mentions.append(GlobalMention(mid, doc[s:e], [0]))
            ids.append(mid)
        clusters.append(GlobalCluster(sorted(ids), representative=rep))
    return clusters, mentions


class TestPlanEdits:
    def test_identical_surface_skipped(self):
        doc = "Alice went. She slept."
        clusters, mentions = make_world(doc, [([(0, 5), (12, 15)], (0, 5))])
        edits, dropped = plan_edits(clusters, mentions)
        assert dropped == 0
        assert edits == [Edit(12, 15, "Alice", 0)]

    def test_no_representative_no_edits(self):
        doc = "It rains. They left."
        clusters, mentions = make_world(doc, [([(0, 2), (10, 14)], None)])
        edits, dropped = plan_edits(clusters, mentions)
        assert edits == [] and dropped == 0

    def test_overlap_keeps_longest_then_earliest(self):
        doc = "x" * 40
        clusters, mentions = make_world(
            doc,
            [
                ([(10, 20), (30, 32)], (30, 32)),
                ([(14, 24), (34, 36)], (34, 36)),
            ],
        )
        edits, dropped = plan_edits(clusters, mentions)
        spans = [(e.start, e.end) for e in edits]
        # both candidates are length 10: the earlier start (10, 20) wins
        assert (10, 20) in spans
        assert (14, 24) not in spans
        assert dropped == 1

    def test_sentence_start_capitalization(self):
        doc = "the dog barked. He ran."
        clusters, mentions = make_world(doc, [([(0, 7), (16, 18)], (0, 7))])
        edits, _ = plan_edits(clusters, mentions, sentence_starts={0, 16})
        assert edits == [Edit(16, 18, "The dog", 0)]

    def test_no_capitalization_mid_sentence(self):
        doc = "the dog barked at him."
        clusters, mentions = make_world(doc, [([(0, 7), (18, 21)], (0, 7))])
        edits, _ = plan_edits(clusters, mentions, sentence_starts={0})
        assert edits == [Edit(18, 21, "the dog", 0)]


class TestApplyEdits:
    def test_basic_splice(self):
        got = apply_edits("Alice went home. She slept.", [Edit(17, 20, "Alice", 0)])
        assert got.text == "Alice went home. Alice slept."
        assert got.applied == 1

    def test_empty_edit_list_is_identity(self):
        text = "nothing changes here."
        got = apply_edits(text, [])
        assert got.text == text
        for i in range(len(text) + 1):
            assert got.offset_map.map(i) == i

    def test_round_trip_unedited_characters(self):
        text = "aaa bbb ccc ddd"
        edits = [Edit(4, 7, "XXXXXX", 0), Edit(12, 15, "Y", 0)]
        got = apply_edits(text, edits)
        assert got.text == "aaa XXXXXX ccc Y"
        edited = set(range(4, 7)) | set(range(12, 15))
        for i in range(len(text)):
            if i not in edited:
                assert got.text[got.offset_map.map(i)] == text[i]

    def test_overlapping_edits_rejected(self):
        with pytest.raises(IntegrityError):
            apply_edits("abcdef", [Edit(0, 3, "x", 0), Edit(2, 5, "y", 0)])

    def test_unsorted_edits_rejected(self):
        with pytest.raises(IntegrityError):
            apply_edits("abcdef", [Edit(3, 4, "x", 0), Edit(0, 1, "y", 0)])

    def test_out_of_bounds_edit_rejected(self):
        with pytest.raises(IntegrityError):
            apply_edits("abc", [Edit(1, 9, "x", 0)])

    def test_length_delta_sums(self):
        text = "one two three four"
        edits = [Edit(0, 3, "a", 0), Edit(8, 13, "bcdefgh", 0)]
        got = apply_edits(text, edits)
        delta = sum(len(e.replacement) - (e.end - e.start) for e in edits)
        assert len(got.text) == len(text) + delta

    def test_offset_map_monotone_and_end_anchored(self):
        text = "alpha beta gamma"
        edits = [Edit(6, 10, "B", 0)]
        got = apply_edits(text, edits)
        values = [got.offset_map.map(i) for i in range(len(text) + 1)]
        assert values == sorted(values)
        assert values[-1] == len(got.text)

    def test_map_rejects_out_of_range(self):
        got = apply_edits("abc", [])
        with pytest.raises(IndexError):
            got.offset_map.map(99)


@st.composite
def texts_and_edits(draw):
    text = draw(st.text(alphabet="abcdef ghij", min_size=1, max_size=120))
    n = draw(st.integers(min_value=0, max_value=min(6, (len(text) + 1) // 2)))
    cuts = draw(
        st.lists(
            st.integers(min_value=0, max_value=len(text)),
            min_size=2 * n,
            max_size=2 * n,
            unique=True,
        )
    )
    cuts.sort()
    spans = [(cuts[2 * i], cuts[2 * i + 1]) for i in range(n) if cuts[2 * i] < cuts[2 * i + 1]]
    replacements = draw(
        st.lists(st.text(alphabet="XYZ", max_size=8), min_size=len(spans), max_size=len(spans))
    )
    edits = [Edit(s, e, r, 0) for (s, e), r in zip(spans, replacements)]
    return text, edits


class TestOffsetMapProperty:
    @given(texts_and_edits())
    @settings(max_examples=250)
    def test_random_plans_round_trip(self, case):
        text, edits = case
        got = apply_edits(text, edits)
        edited = set()
        for e in edits:
            edited.update(range(e.start, e.end))
        for i in range(len(text)):
            j = got.offset_map.map(i)
            assert 0 <= j <= len(got.text)
            if i not in edited:
                assert got.text[j] == text[i]

    @given(texts_and_edits())
    @settings(max_examples=100)
    def test_non_edit_regions_preserved_in_order(self, case):
        text, edits = case
        got = apply_edits(text, edits)
        # remove edited spans from original; honoring replacements rebuilds the text
        pieces = []
        pos = 0
        for e in edits:
            pieces.append(text[pos : e.start])
            pieces.append(e.replacement)
            pos = e.end
        pieces.append(text[pos:])
        assert "".join(pieces) == got.text
