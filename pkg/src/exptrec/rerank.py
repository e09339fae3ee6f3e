"""Stage-2 reranking: chain-evidence bundles, reasoning prompts, a
pluggable LLM reranker with a deterministic fallback, and SFT triplet
emission.

The decision grammar is a single line "RANKING: id1 > id2 > ..." covering
exactly the shortlist ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .chains import (
    ChainDirection,
    ChainEvidence,
    InteractionGraph,
    co_usage_count,
    enumerate_chains,
    top_chains,
)
from .corpus import CorpusStore, EntityKind
from .errors import DataError, ProviderError
from .providers import format_ranking_line, parse_ranking_line
from .retrieval import Query, RankEntry, RankedList, format_query

DEFAULT_ALPHA = 0.5
DESCRIPTION_SNIPPET_CHARS = 200


class RerankMode(str, Enum):
    LLM = "llm"
    FALLBACK = "deterministic-fallback"


@dataclass(frozen=True)
class EvidenceBundle:
    query: Query
    shortlist: RankedList
    per_candidate: dict[str, ChainEvidence]
    kind: EntityKind


@dataclass(frozen=True)
class SftTriplet:
    q: str
    r: str
    a: str


@dataclass(frozen=True)
class RerankResult:
    ranking: RankedList
    justification: str
    mode: RerankMode


def direction_for_kind(kind: EntityKind) -> ChainDirection:
    return ChainDirection.D_TO_B if kind is EntityKind.BASELINE else ChainDirection.B_TO_D


def assemble_evidence(
    query: Query,
    shortlist: RankedList,
    graph: InteractionGraph,
    store: CorpusStore,
    kind: EntityKind,
    exclude_gold_terminals: bool = False,
) -> EvidenceBundle:
    """Top-3 chain evidence for each shortlisted candidate.

    Free-text queries without a source paper get empty evidence for every
    candidate.
    """
    if not shortlist.entries:
        raise DataError("shortlist is empty")
    per_candidate: dict[str, ChainEvidence] = {}
    if query.source_paper_id is not None and query.source_paper_id in store.papers:
        chains = enumerate_chains(
            graph,
            store,
            query.source_paper_id,
            direction_for_kind(kind),
            exclude_gold_terminals=exclude_gold_terminals,
        )
        for entry in shortlist.entries:
            per_candidate[entry.entity_id] = top_chains(chains, entry.entity_id, store)
    else:
        for entry in shortlist.entries:
            per_candidate[entry.entity_id] = ChainEvidence(candidate=entry.entity_id, chains=())
    return EvidenceBundle(query=query, shortlist=shortlist, per_candidate=per_candidate, kind=kind)


def _candidate_block(entry: RankEntry, store: CorpusStore, evidence: ChainEvidence) -> str:
    entity = store.entities.get(entry.entity_id)
    description = entity.description[:DESCRIPTION_SNIPPET_CHARS] if entity else ""
    lines = [
        f"[{entry.rank}] id={entry.entity_id} score={entry.score:.6f}",
        f"    description: {description}",
    ]
    if evidence.chains:
        lines.append("    chains:")
        for chain in evidence.chains:
            lines.append(
                f"      {chain.origin_paper} -> {chain.bridge_entity} -> "
                f"{chain.bridge_paper} -> {chain.terminal_entity} (support={chain.support})"
            )
    else:
        lines.append("    chains: none")
    return "\n".join(lines)


def serialize_evidence(bundle: EvidenceBundle, store: CorpusStore) -> str:
    """Deterministic candidate-block serialization shared by prompt and SFT R."""
    return "\n".join(
        _candidate_block(entry, store, bundle.per_candidate[entry.entity_id])
        for entry in bundle.shortlist.entries
    )


def build_rerank_prompt(bundle: EvidenceBundle, store: CorpusStore) -> str:
    """Full listwise reranking prompt for one query."""
    return (
        f"You are ranking candidate {bundle.kind.value}s for a research idea.\n"
        f"Query:\n{format_query(bundle.query)}\n\n"
        f"Candidates (in retrieval order):\n"
        f"{serialize_evidence(bundle, store)}\n\n"
        "Reason step by step about which candidates suit the described "
        "experiments, relying primarily on the interaction chains and their "
        "support counts; higher support means stronger community co-usage "
        "evidence. Finish with exactly one line of the form:\n"
        "RANKING: id1 > id2 > ...\n"
        "covering every candidate id exactly once."
    )


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def _fallback_ranking(bundle: EvidenceBundle, alpha: float) -> tuple[RankedList, str]:
    entries = bundle.shortlist.entries
    retrieval = _minmax([e.score for e in entries])
    supports = [
        float(sum(c.support for c in bundle.per_candidate[e.entity_id].chains)) for e in entries
    ]
    chain_component = _minmax(supports)
    blended = [alpha * r + (1 - alpha) * c for r, c in zip(retrieval, chain_component)]
    order = sorted(range(len(entries)), key=lambda i: (-blended[i], entries[i].rank))
    ranking = RankedList(
        query_id=bundle.shortlist.query_id,
        entries=tuple(
            RankEntry(entity_id=entries[i].entity_id, score=blended[i], rank=r + 1)
            for r, i in enumerate(order)
        ),
    )
    justification = (
        f"Deterministic blend of retrieval score and chain support (alpha={alpha})."
    )
    return ranking, justification


def rerank(
    bundle: EvidenceBundle,
    store: CorpusStore,
    client=None,
    alpha: float = DEFAULT_ALPHA,
) -> RerankResult:
    """Listwise rerank via the LLM client; any failure falls back deterministically."""
    shortlist_ids = bundle.shortlist.ids()
    if client is not None:
        try:
            response = client.rerank(build_rerank_prompt(bundle, store))
            ids = parse_ranking_line(response.ranking_line)
            if sorted(ids) == sorted(shortlist_ids):
                # Scores become descending position scores; only order matters.
                ranking = RankedList(
                    query_id=bundle.shortlist.query_id,
                    entries=tuple(
                        RankEntry(entity_id=eid, score=float(len(ids) - i), rank=i + 1)
                        for i, eid in enumerate(ids)
                    ),
                )
                return RerankResult(ranking=ranking, justification=response.justification, mode=RerankMode.LLM)
        except ProviderError:
            pass
    ranking, justification = _fallback_ranking(bundle, alpha)
    return RerankResult(ranking=ranking, justification=justification, mode=RerankMode.FALLBACK)


# ---------------------------------------------------------------------------
# SFT triplet emission


def _gold_support(graph: InteractionGraph, store: CorpusStore, origin: str, kind: EntityKind, gold_id: str) -> int:
    """Best co-usage support linking origin's bridges to a gold candidate."""
    bridges = (
        graph.paper_to_datasets.get(origin, frozenset())
        if kind is EntityKind.BASELINE
        else graph.paper_to_baselines.get(origin, frozenset())
    )
    best = 0
    for bridge in bridges:
        best = max(best, co_usage_count(graph, bridge, gold_id))
    return best


def _reasoning_template(bundle: EvidenceBundle, ordered_ids: list[str]) -> str:
    lines = []
    for eid in ordered_ids:
        evidence = bundle.per_candidate.get(eid)
        if evidence and evidence.chains:
            top = evidence.chains[0]
            lines.append(
                f"{eid} is supported by co-usage through {top.bridge_entity} "
                f"(support={top.support})."
            )
        else:
            lines.append(f"{eid} has no co-usage chain from this paper's resources.")
    lines.append(format_ranking_line(ordered_ids))
    return "\n".join(lines)


def build_sft_triplet(
    store: CorpusStore,
    graph: InteractionGraph,
    paper_id: str,
    kind: EntityKind,
    shortlist_cap: int = 20,
) -> SftTriplet:
    """One (Q, R, A) instance for a paper and entity kind.

    The shortlist mixes the gold items with chain-derived distractors.
    Chains emitted into R never terminate at a gold item (training-time
    gold-terminal exclusion); A orders gold items by descending best
    co-usage support, then id, ahead of every distractor.
    """
    paper = store.papers[paper_id]
    gold = sorted(store.gold(paper_id, kind))
    if not gold:
        raise DataError(f"paper {paper_id} has no gold {kind.value}s")
    direction = direction_for_kind(kind)
    distractor_chains = enumerate_chains(graph, store, paper_id, direction, exclude_gold_terminals=True)
    distractors: list[str] = []
    seen = set(gold)
    for chain in distractor_chains:
        if chain.terminal_entity not in seen:
            seen.add(chain.terminal_entity)
            distractors.append(chain.terminal_entity)
        if len(gold) + len(distractors) >= shortlist_cap:
            break

    shortlist_ids = sorted(gold + distractors)
    shortlist = RankedList(
        query_id=paper_id,
        entries=tuple(
            RankEntry(entity_id=eid, score=0.0, rank=i + 1) for i, eid in enumerate(shortlist_ids)
        ),
    )
    query = Query(query_id=paper_id, synopsis_text=paper.abstract, source_paper_id=paper_id)
    bundle = assemble_evidence(query, shortlist, graph, store, kind, exclude_gold_terminals=True)

    gold_order = sorted(
        gold, key=lambda g: (-_gold_support(graph, store, paper_id, kind, g), g)
    )
    distractor_order = sorted(
        distractors,
        key=lambda d: (
            -sum(c.support for c in bundle.per_candidate[d].chains),
            d,
        ),
    )
    ordered = gold_order + distractor_order
    return SftTriplet(
        q=format_query(query),
        r=serialize_evidence(bundle, store),
        a=_reasoning_template(bundle, ordered),
    )


def emit_sft_triplets(
    store: CorpusStore,
    graph: InteractionGraph,
    split: list[str],
    out_path: str | Path,
    shortlist_cap: int = 20,
) -> tuple[int, int]:
    """Write line-delimited (Q, R, A) triplets; returns (written, skipped)."""
    written = 0
    skipped = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for paper_id in split:
            if paper_id not in store.papers:
                raise DataError(f"unknown paper {paper_id}")
            for kind in (EntityKind.BASELINE, EntityKind.DATASET):
                if not store.gold(paper_id, kind):
                    skipped += 1
                    continue
                triplet = build_sft_triplet(store, graph, paper_id, kind, shortlist_cap)
                fh.write(
                    json.dumps(
                        {"Q": triplet.q, "R": triplet.r, "A": triplet.a},
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    + "\n"
                )
                written += 1
    return written, skipped
