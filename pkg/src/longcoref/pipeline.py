"""End-to-end orchestration: segment, resolve, merge, represent, rewrite."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .config import PipelineConfig
from .merge import (
    DistanceEntry,
    GlobalCluster,
    GlobalMention,
    MentionGraph,
    Pair,
    PairStat,
    merge_clusterings,
)
from .representative import TaggedToken, select_representatives, tag_pronouns
from .resolver import LocalClustering, resolve_chunk
from .rewriter import Edit, RewriteResult, apply_edits, plan_edits
from .segmenter import Chunk, SentenceSpan, chunk_document, split_sentences


@dataclass
class PipelineResult:
    """Everything the pipeline produced, for rewriting and inspection."""

    text: str
    sentences: list[SentenceSpan] = field(default_factory=list)
    chunks: list[Chunk] = field(default_factory=list)
    clusterings: list[LocalClustering] = field(default_factory=list)
    mentions: list[GlobalMention] = field(default_factory=list)
    pair_stats: dict[Pair, PairStat] = field(default_factory=dict)
    distances: dict[Pair, DistanceEntry] = field(default_factory=dict)
    graph: MentionGraph | None = None
    clusters: list[GlobalCluster] = field(default_factory=list)
    tags: list[TaggedToken] = field(default_factory=list)
    edits: list[Edit] = field(default_factory=list)
    rewrite: RewriteResult | None = None

    @property
    def rewritten_text(self) -> str:
        return self.rewrite.text if self.rewrite else self.text


def analyze_document(
    text: str, config: PipelineConfig | None = None, *, llm_client=None
) -> PipelineResult:
    """Run every stage up to global clusters and representatives."""
    cfg = (config or PipelineConfig()).validate()
    result = PipelineResult(text=text)
    result.sentences = split_sentences(text)
    if not result.sentences:
        return result
    result.chunks = chunk_document(text, result.sentences, cfg.max_chunk_tokens, cfg.chunk_mode)

    def resolve_one(chunk: Chunk) -> LocalClustering:
        return resolve_chunk(
            text[chunk.start : chunk.end],
            chunk.index,
            cfg.resolver,
            endpoint=cfg.resolver_endpoint,
            llm_client=llm_client,
            timeout=cfg.timeout,
            retries=cfg.retries,
        )

    if cfg.parallelism > 1 and len(result.chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            result.clusterings = list(pool.map(resolve_one, result.chunks))
    else:
        result.clusterings = [resolve_one(c) for c in result.chunks]

    (
        result.mentions,
        result.pair_stats,
        result.distances,
        result.graph,
        result.clusters,
    ) = merge_clusterings(result.clusterings, result.chunks, cfg.threshold)

    result.tags = tag_pronouns(
        text,
        cfg.tagger,
        endpoint=cfg.tagger_endpoint,
        timeout=cfg.timeout,
        retries=cfg.retries,
    )
    select_representatives(result.clusters, result.mentions, result.tags)
    return result


def rewrite_document(
    text: str, config: PipelineConfig | None = None, *, llm_client=None
) -> PipelineResult:
    """Full pipeline; ``result.rewrite`` holds the rewritten document."""
    result = analyze_document(text, config, llm_client=llm_client)
    if not result.sentences:
        result.rewrite = apply_edits(text, [])
        return result
    sentence_starts = {s.start for s in result.sentences}
    edits, dropped = plan_edits(result.clusters, result.mentions, sentence_starts)
    result.edits = edits
    result.rewrite = apply_edits(text, edits, dropped)
    return result
