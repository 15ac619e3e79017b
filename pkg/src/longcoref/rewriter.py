"""Plan and apply mention-replacement edits.

Every cluster member whose surface differs from the representative's is
a candidate edit.  Overlapping candidates keep the longest span (ties:
earliest start); the survivors are applied in one left-to-right splice
that also produces a monotone original-to-rewritten offset map.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .errors import IntegrityError
from .merge import GlobalCluster, GlobalMention


@dataclass(frozen=True)
class Edit:
    start: int
    end: int
    replacement: str
    cluster_index: int


class OffsetMap:
    """Monotone map from original to rewritten character positions.

    Positions inside a replaced span clamp to the replacement's start;
    everything outside maps exactly, so ``original[i] ==
    rewritten[map(i)]`` for every unedited character.
    """

    def __init__(self, segments: list[tuple[int, int, int, bool]], orig_len: int, new_len: int):
        # segments: (orig_start, orig_end, new_start, inside_edit), sorted
        self._segments = segments
        self.orig_len = orig_len
        self.new_len = new_len

    def map(self, pos: int) -> int:
        if not (0 <= pos <= self.orig_len):
            raise IndexError(f"position {pos} outside [0, {self.orig_len}]")
        if pos == self.orig_len:
            return self.new_len
        i = bisect_right(self._segments, pos, key=lambda seg: seg[0]) - 1
        orig_start, _orig_end, new_start, inside = self._segments[i]
        return new_start if inside else new_start + (pos - orig_start)

    def to_jsonable(self) -> list[dict]:
        return [
            {"orig_start": s, "orig_end": e, "new_start": n, "replaced": r}
            for s, e, n, r in self._segments
        ]


@dataclass
class RewriteResult:
    text: str
    offset_map: OffsetMap
    applied: int
    dropped: int


def plan_edits(
    clusters: list[GlobalCluster],
    mentions: list[GlobalMention],
    sentence_starts: set[int] | None = None,
) -> tuple[list[Edit], int]:
    """Build the disjoint, sorted edit list; returns (edits, dropped).

    Clusters without a representative contribute nothing.  The
    representative's own occurrence is never rewritten.  When a replaced
    span opened a sentence and the replacement starts lowercase, its
    first character is capitalized so the rewritten text stays natural.
    """
    by_id = {m.id: m for m in mentions}
    candidates: list[Edit] = []
    for ci, cluster in enumerate(clusters):
        rep = cluster.representative
        if rep is None:
            continue
        rep_surface = by_id[rep].surface
        for mid in cluster.members:
            if mid == rep:
                continue
            if by_id[mid].surface == rep_surface:
                continue
            replacement = rep_surface
            if sentence_starts and mid[0] in sentence_starts and replacement[:1].islower():
                replacement = replacement[0].upper() + replacement[1:]
            candidates.append(Edit(mid[0], mid[1], replacement, ci))

    kept: list[Edit] = []
    # Longest span wins, ties by earliest start; spans are unique per
    # mention so the order is total.
    for cand in sorted(candidates, key=lambda e: (-(e.end - e.start), e.start, e.end)):
        if all(cand.end <= k.start or cand.start >= k.end for k in kept):
            kept.append(cand)
    kept.sort(key=lambda e: (e.start, e.end))
    return kept, len(candidates) - len(kept)


def apply_edits(text: str, edits: list[Edit], dropped: int = 0) -> RewriteResult:
    """Splice disjoint, sorted edits into ``text`` in one pass."""
    prev_end = 0
    for e in edits:
        if not (0 <= e.start < e.end <= len(text)):
            raise IntegrityError(f"edit span ({e.start}, {e.end}) outside document")
        if e.start < prev_end:
            raise IntegrityError("edits must be sorted and pairwise disjoint")
        prev_end = e.end

    pieces: list[str] = []
    segments: list[tuple[int, int, int, bool]] = []
    orig_pos = 0
    new_pos = 0
    for e in edits:
        if e.start > orig_pos:
            segments.append((orig_pos, e.start, new_pos, False))
            pieces.append(text[orig_pos : e.start])
            new_pos += e.start - orig_pos
        segments.append((e.start, e.end, new_pos, True))
        pieces.append(e.replacement)
        new_pos += len(e.replacement)
        orig_pos = e.end
    if orig_pos < len(text) or not segments:
        segments.append((orig_pos, len(text), new_pos, False))
        pieces.append(text[orig_pos:])
        new_pos += len(text) - orig_pos

    rewritten = "".join(pieces)
    return RewriteResult(
        text=rewritten,
        offset_map=OffsetMap(segments, len(text), len(rewritten)),
        applied=len(edits),
        dropped=dropped,
    )
