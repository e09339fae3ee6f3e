"""Recall@k / HitRate@k metrics and end-to-end pipeline evaluation.

Recall@k is the fraction of gold items inside the top-k; HitRate@k is the
indicator that at least one gold item appears there. Queries whose gold
set is empty are excluded (the metrics are undefined) and counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .chains import InteractionGraph, build_graph
from .corpus import CorpusStore, EntityKind
from .errors import DataError
from .perception import build_perception_cache, representation_text
from .rerank import assemble_evidence, rerank
from .retrieval import (
    DEFAULT_SHORTLIST,
    DEFAULT_TASK_INSTRUCTION,
    DEFAULT_TEMPERATURE,
    Query,
    RankedList,
    build_dense_index,
    retrieve_shortlist,
)

DEFAULT_RECALL_KS = (10, 20, 30)
DEFAULT_HIT_KS = (5, 10, 15)


def recall_at_k(ranked: RankedList, gold: frozenset[str] | set[str], k: int) -> float:
    if not gold:
        raise DataError("undefined recall: empty gold set")
    if k < 1:
        raise DataError("k must be >= 1")
    top = set(ranked.ids()[:k])
    return len(top & set(gold)) / len(gold)


def hitrate_at_k(ranked: RankedList, gold: frozenset[str] | set[str], k: int) -> int:
    if not gold:
        raise DataError("undefined hitrate: empty gold set")
    if k < 1:
        raise DataError("k must be >= 1")
    return 1 if set(ranked.ids()[:k]) & set(gold) else 0


@dataclass(frozen=True)
class PipelineToggles:
    collective_perception: bool = True
    self_description: bool = True
    chains: bool = True
    reranker: bool = True

    def __post_init__(self) -> None:
        if not self.collective_perception and not self.self_description:
            raise DataError("at least one representation segment must be enabled")

    def label(self) -> str:
        parts = []
        if not self.collective_perception:
            parts.append("no-cp")
        if not self.self_description:
            parts.append("no-desc")
        if not self.chains:
            parts.append("no-chains")
        parts.append("rerank" if self.reranker else "no-rerank")
        return "+".join(parts) if parts else "full"


@dataclass(frozen=True)
class PipelineConfig:
    toggles: PipelineToggles = PipelineToggles()
    shortlist_k: int = DEFAULT_SHORTLIST
    temperature: float = DEFAULT_TEMPERATURE
    alpha: float = 0.5
    radius: int = 1
    task_instruction: str = DEFAULT_TASK_INSTRUCTION
    recall_ks: tuple[int, ...] = DEFAULT_RECALL_KS
    hit_ks: tuple[int, ...] = DEFAULT_HIT_KS


@dataclass
class QueryMetrics:
    recall_at: dict[int, float]
    hit_at: dict[int, int]


@dataclass
class EvalResult:
    method: str
    kind: EntityKind
    per_query: dict[str, QueryMetrics]
    mean_recall: dict[int, float]
    mean_hit: dict[int, float]
    excluded: int
    fingerprint: str = ""

    @staticmethod
    def aggregate(method: str, kind: EntityKind, per_query: dict[str, QueryMetrics], excluded: int, fingerprint: str = "") -> "EvalResult":
        ks_r = sorted({k for m in per_query.values() for k in m.recall_at})
        ks_h = sorted({k for m in per_query.values() for k in m.hit_at})
        n = len(per_query)
        mean_recall = {k: sum(m.recall_at[k] for m in per_query.values()) / n for k in ks_r} if n else {}
        mean_hit = {k: sum(m.hit_at[k] for m in per_query.values()) / n for k in ks_h} if n else {}
        return EvalResult(method, kind, per_query, mean_recall, mean_hit, excluded, fingerprint)


def rank_candidates(
    store: CorpusStore,
    graph: InteractionGraph,
    index,
    query: Query,
    kind: EntityKind,
    provider,
    config: PipelineConfig,
    client=None,
    adapter=None,
) -> RankedList:
    """One query through Stage-1 (and Stage-2 per the toggles)."""
    shortlist = retrieve_shortlist(
        query, index, provider, k=config.shortlist_k, temperature=config.temperature, adapter=adapter
    )
    if not config.toggles.reranker or not shortlist.entries:
        return shortlist
    if config.toggles.chains:
        bundle = assemble_evidence(query, shortlist, graph, store, kind)
    else:
        no_chain_query = replace(query, source_paper_id=None)
        bundle = assemble_evidence(no_chain_query, shortlist, graph, store, kind)
    return rerank(bundle, store, client=client, alpha=config.alpha).ranking


def build_kind_index(
    store: CorpusStore,
    kind: EntityKind,
    provider,
    config: PipelineConfig,
    perception_cache=None,
    summarizer=None,
):
    """Dense index over this kind's fused target representations."""
    if perception_cache is None:
        perception_cache = build_perception_cache(store, summarizer=summarizer, radius=config.radius, kind=kind)
    entities = store.entities_of_kind(kind)
    texts = [
        representation_text(
            e.description,
            perception_cache[e.entity_id].summary_text if e.entity_id in perception_cache else "",
            use_description=config.toggles.self_description,
            use_cp=config.toggles.collective_perception,
        )
        for e in entities
    ]
    return build_dense_index([e.entity_id for e in entities], texts, provider, kind=kind)


def evaluate(
    store: CorpusStore,
    config: PipelineConfig,
    split: list[str],
    provider,
    client=None,
    adapter=None,
    perception_cache=None,
    fingerprint: str = "",
) -> dict[EntityKind, EvalResult]:
    """Run the pipeline over a split and aggregate the metrics per kind."""
    graph = build_graph(store)
    method = ("dense+rerank" if config.toggles.reranker else "dense") + (
        "" if config.toggles.collective_perception and config.toggles.self_description else f" [{config.toggles.label()}]"
    )
    results: dict[EntityKind, EvalResult] = {}
    for kind in (EntityKind.BASELINE, EntityKind.DATASET):
        index = build_kind_index(store, kind, provider, config, perception_cache=perception_cache)
        per_query: dict[str, QueryMetrics] = {}
        excluded = 0
        for paper_id in split:
            if paper_id not in store.papers:
                raise DataError(f"unknown paper {paper_id}")
            gold = store.gold(paper_id, kind)
            if not gold:
                excluded += 1
                continue
            paper = store.papers[paper_id]
            query = Query(
                query_id=paper_id,
                synopsis_text=paper.abstract,
                task_instruction=config.task_instruction,
                source_paper_id=paper_id,
            )
            ranked = rank_candidates(
                store, graph, index, query, kind, provider, config, client=client, adapter=adapter
            )
            per_query[paper_id] = QueryMetrics(
                recall_at={k: recall_at_k(ranked, gold, k) for k in config.recall_ks},
                hit_at={k: hitrate_at_k(ranked, gold, k) for k in config.hit_ks},
            )
        results[kind] = EvalResult.aggregate(method, kind, per_query, excluded, fingerprint)
    return results


def ablation_run(
    store: CorpusStore,
    split: list[str],
    provider,
    base_config: PipelineConfig = PipelineConfig(),
    client=None,
) -> dict[str, dict[EntityKind, EvalResult]]:
    """Evaluate every valid toggle combination with shared split and settings."""
    out: dict[str, dict[EntityKind, EvalResult]] = {}
    for cp in (True, False):
        for desc in (True, False):
            if not cp and not desc:
                continue
            for chains_on in (True, False):
                for rr in (True, False):
                    toggles = PipelineToggles(
                        collective_perception=cp,
                        self_description=desc,
                        chains=chains_on,
                        reranker=rr,
                    )
                    config = replace(base_config, toggles=toggles)
                    out[toggles.label()] = evaluate(store, config, split, provider, client=client)
    return out
