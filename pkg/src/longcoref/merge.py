"""Merge chunk-local clusterings into document-global coreference sets.

Pipeline: lift local mention spans to global offsets, count per-chunk
agreement for every co-present mention pair, turn the counts into
distances in [0, 1], propagate distances along paths by taking the
maximum product of direct values, threshold into a graph, and read off
its connected components.

Mention ids are their global ``(start, end)`` spans, so id order is
document order and all maps stay sparse (pairs exist only for mentions
that shared a chunk).
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field

from .errors import IntegrityError
from .resolver import LocalClustering
from .segmenter import Chunk

log = logging.getLogger(__name__)

MentionId = tuple[int, int]
Pair = tuple[MentionId, MentionId]


@dataclass
class GlobalMention:
    """A deduplicated mention with document-global span."""

    id: MentionId
    surface: str
    occurrences: list[int] = field(default_factory=list)  # chunk indices


@dataclass
class PairStat:
    """Per-chunk agreement counters for one co-present mention pair.

    For every chunk where both mentions were detected exactly one of the
    two counters increments: ``s`` when they shared a cluster there,
    ``t`` when they did not.
    """

    pair: Pair
    s: int = 0
    t: int = 0


@dataclass(frozen=True)
class DistanceEntry:
    pair: Pair
    d: float
    provenance: str  # "direct" | "propagated"


@dataclass
class MentionGraph:
    """Undirected simple graph over mention ids; edges where d > threshold."""

    nodes: list[MentionId]
    edges: list[Pair]


@dataclass
class GlobalCluster:
    """One connected component; members sorted by document position."""

    members: list[MentionId]
    representative: MentionId | None = None


def _ordered(a: MentionId, b: MentionId) -> Pair:
    return (a, b) if a < b else (b, a)


def unify_mentions(
    clusterings: list[LocalClustering], chunks: list[Chunk]
) -> list[GlobalMention]:
    """Lift local spans to global offsets and merge identical spans.

    Occurrences record every chunk in which the span was detected.
    Output is sorted by (start, end).
    """
    chunk_by_index = {c.index: c for c in chunks}
    merged: dict[MentionId, GlobalMention] = {}
    for clustering in clusterings:
        chunk = chunk_by_index.get(clustering.chunk_index)
        if chunk is None:
            raise IntegrityError(f"clustering references unknown chunk {clustering.chunk_index}")
        length = chunk.end - chunk.start
        for m in clustering.mentions:
            if not (0 <= m.start < m.end <= length):
                raise IntegrityError(
                    f"chunk {chunk.index}: local span ({m.start}, {m.end}) "
                    f"exceeds chunk bounds (length {length})"
                )
            gid = (chunk.start + m.start, chunk.start + m.end)
            entry = merged.get(gid)
            if entry is None:
                merged[gid] = GlobalMention(gid, m.surface, [clustering.chunk_index])
            elif clustering.chunk_index not in entry.occurrences:
                entry.occurrences.append(clustering.chunk_index)
    out = sorted(merged.values(), key=lambda g: g.id)
    for g in out:
        g.occurrences.sort()
    return out


def accumulate_pair_stats(
    clusterings: list[LocalClustering], chunks: list[Chunk]
) -> dict[Pair, PairStat]:
    """Count, per chunk, shared-cluster vs. separate outcomes for every
    pair of mentions detected together in that chunk."""
    chunk_by_index = {c.index: c for c in chunks}
    stats: dict[Pair, PairStat] = {}
    for clustering in clusterings:
        chunk = chunk_by_index[clustering.chunk_index]
        ids: list[MentionId] = []
        seen: set[MentionId] = set()
        cluster_of: dict[MentionId, int] = {}
        for li, m in enumerate(clustering.mentions):
            gid = (chunk.start + m.start, chunk.start + m.end)
            if gid not in seen:
                seen.add(gid)
                ids.append(gid)
        for ci, cluster in enumerate(clustering.clusters):
            for li in cluster:
                m = clustering.mentions[li]
                cluster_of[(chunk.start + m.start, chunk.start + m.end)] = ci
        ids.sort()
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pair = (ids[i], ids[j])
                stat = stats.get(pair)
                if stat is None:
                    stat = stats[pair] = PairStat(pair)
                ca = cluster_of.get(ids[i])
                cb = cluster_of.get(ids[j])
                if ca is not None and ca == cb:
                    stat.s += 1
                else:
                    stat.t += 1
    return stats


def direct_distance(stat: PairStat) -> float:
    """Fraction of co-present chunks in which the pair shared a cluster."""
    total = stat.s + stat.t
    if total < 1:
        raise IntegrityError(f"pair {stat.pair} has no co-presence counts")
    return stat.s / total


def all_pairs_max_product(
    direct: dict[Pair, float], *, floor: float = 0.0
) -> dict[Pair, DistanceEntry]:
    """Propagate distances: for every reachable pair, the maximum over
    paths of the product of direct values along the path.

    Runs a max-product Dijkstra from each node: the source starts at 1,
    everything else at 0, the unvisited node with the largest distance is
    settled next (lowest mention id on ties), and neighbors relax via
    ``alt = d * w``.  Because weights lie in [0, 1], path products never
    increase, so the greedy settlement is exact; a direct edge therefore
    survives as ``max(direct value, best path product)``.

    ``floor`` prunes paths once their product drops to or below it; with
    the default 0.0 the result is exact for all reachable pairs.  Entries
    with d <= floor are omitted (unreachable pairs are always omitted).
    """
    weights: dict[Pair, float] = {}
    adj: dict[MentionId, list[MentionId]] = {}
    for (a, b), w in direct.items():
        if w < 0.0 or w > 1.0:
            log.warning("clamping direct distance %r for pair %s into [0, 1]", w, (a, b))
            w = min(max(w, 0.0), 1.0)
        weights[(a, b)] = w
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    out: dict[Pair, DistanceEntry] = {}
    for source in sorted(adj):
        best: dict[MentionId, float] = {source: 1.0}
        visited: set[MentionId] = set()
        heap: list[tuple[float, MentionId]] = [(-1.0, source)]
        while heap:
            neg, u = heapq.heappop(heap)
            if u in visited:
                continue
            visited.add(u)
            du = -neg
            for v in adj[u]:
                if v in visited:
                    continue
                alt = du * weights[_ordered(u, v)]
                if alt > floor and alt > best.get(v, 0.0):
                    best[v] = alt
                    heapq.heappush(heap, (-alt, v))
        for target, d in best.items():
            if target <= source or d <= floor:
                continue
            pair = (source, target)
            provenance = "direct" if direct.get(pair) == d else "propagated"
            out[pair] = DistanceEntry(pair, d, provenance)
    return out


def build_graph(
    distances: dict[Pair, DistanceEntry] | dict[Pair, float],
    threshold: float,
    nodes: list[MentionId] | None = None,
) -> MentionGraph:
    """Edges exactly where distance is strictly greater than ``threshold``."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be within [0, 1]")
    edges: list[Pair] = []
    node_set: set[MentionId] = set(nodes or [])
    for pair, entry in distances.items():
        d = entry.d if isinstance(entry, DistanceEntry) else entry
        node_set.update(pair)
        if d > threshold:
            edges.append(pair)
    return MentionGraph(nodes=sorted(node_set), edges=sorted(edges))


def components(graph: MentionGraph) -> list[GlobalCluster]:
    """Connected components of the undirected mention graph.

    The relation is symmetric, so on this graph connected and strongly
    connected components coincide; each component is one coreference set.
    """
    adj: dict[MentionId, list[MentionId]] = {n: [] for n in graph.nodes}
    for a, b in graph.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen: set[MentionId] = set()
    clusters: list[GlobalCluster] = []
    for node in sorted(adj):
        if node in seen:
            continue
        stack = [node]
        members: list[MentionId] = []
        seen.add(node)
        while stack:
            u = stack.pop()
            members.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        clusters.append(GlobalCluster(sorted(members)))
    clusters.sort(key=lambda c: c.members[0])
    return clusters


def merge_clusterings(
    clusterings: list[LocalClustering],
    chunks: list[Chunk],
    threshold: float,
) -> tuple[list[GlobalMention], dict[Pair, PairStat], dict[Pair, DistanceEntry], MentionGraph, list[GlobalCluster]]:
    """Full merge phase; returns every intermediate for inspection.

    Propagation is pruned at the threshold, which is lossless for the
    graph: products only shrink along a path, so no pruned extension
    could have produced an edge.
    """
    mentions = unify_mentions(clusterings, chunks)
    stats = accumulate_pair_stats(clusterings, chunks)
    direct = {pair: direct_distance(stat) for pair, stat in stats.items()}
    distances = all_pairs_max_product(direct, floor=threshold)
    graph = build_graph(distances, threshold, nodes=[m.id for m in mentions])
    return mentions, stats, distances, graph, components(graph)
