"""Heterogeneous paper/resource interaction graph and chain mining.

A chain anchors at a query paper p, crosses one of its used resources
(bridge entity), jumps to another paper using that resource (bridge
paper), and terminates at a resource of the opposite kind used by the
bridge paper. Its support is the co-usage count of (bridge, terminal).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import CorpusStore, EntityKind
from .errors import DataError


class ChainDirection(str, Enum):
    D_TO_B = "D->B"
    B_TO_D = "B->D"


@dataclass
class InteractionGraph:
    paper_to_baselines: dict[str, frozenset[str]]
    paper_to_datasets: dict[str, frozenset[str]]
    baseline_to_papers: dict[str, frozenset[str]]
    dataset_to_papers: dict[str, frozenset[str]]
    _co_usage_cache: dict[tuple[str, str], int] = field(default_factory=dict, repr=False)

    def papers_using(self, entity_id: str) -> frozenset[str]:
        if entity_id in self.baseline_to_papers:
            return self.baseline_to_papers[entity_id]
        if entity_id in self.dataset_to_papers:
            return self.dataset_to_papers[entity_id]
        raise DataError(f"unknown entity {entity_id}")


@dataclass(frozen=True)
class InteractionChain:
    origin_paper: str
    bridge_entity: str
    bridge_paper: str
    terminal_entity: str
    direction: ChainDirection
    support: int


@dataclass(frozen=True)
class ChainEvidence:
    candidate: str
    chains: tuple[InteractionChain, ...]


def build_graph(store: CorpusStore) -> InteractionGraph:
    """Mirror the usage edges of a validated store into forward/inverted maps."""
    p2b: dict[str, frozenset[str]] = {}
    p2d: dict[str, frozenset[str]] = {}
    b2p: dict[str, set[str]] = {}
    d2p: dict[str, set[str]] = {}
    for paper in store.papers.values():
        if paper.used_baselines:
            p2b[paper.paper_id] = paper.used_baselines
            for b in paper.used_baselines:
                b2p.setdefault(b, set()).add(paper.paper_id)
        if paper.used_datasets:
            p2d[paper.paper_id] = paper.used_datasets
            for d in paper.used_datasets:
                d2p.setdefault(d, set()).add(paper.paper_id)
    # Entities never used by any paper still need to resolve in lookups.
    for entity in store.entities.values():
        target = b2p if entity.kind is EntityKind.BASELINE else d2p
        target.setdefault(entity.entity_id, set())
    return InteractionGraph(
        paper_to_baselines=p2b,
        paper_to_datasets=p2d,
        baseline_to_papers={k: frozenset(v) for k, v in b2p.items()},
        dataset_to_papers={k: frozenset(v) for k, v in d2p.items()},
    )


def co_usage_count(graph: InteractionGraph, x: str, y: str) -> int:
    """Number of papers using both x and y; symmetric."""
    key = (x, y) if x <= y else (y, x)
    cached = graph._co_usage_cache.get(key)
    if cached is not None:
        return cached
    count = len(graph.papers_using(x) & graph.papers_using(y))
    graph._co_usage_cache[key] = count
    return count


def enumerate_chains(
    graph: InteractionGraph,
    store: CorpusStore,
    origin_paper: str,
    direction: ChainDirection,
    exclude_gold_terminals: bool = False,
) -> list[InteractionChain]:
    """All chains rooted at origin_paper in the given direction.

    exclude_gold_terminals drops chains whose terminal sits in the origin
    paper's gold set of the terminal kind; that applies only while
    building training data, never at inference.
    """
    if origin_paper not in store.papers:
        raise DataError(f"unknown paper {origin_paper}")
    if direction is ChainDirection.D_TO_B:
        bridges = graph.paper_to_datasets.get(origin_paper, frozenset())
        bridge_to_papers = graph.dataset_to_papers
        paper_to_terminals = graph.paper_to_baselines
        gold = store.gold(origin_paper, EntityKind.BASELINE)
    else:
        bridges = graph.paper_to_baselines.get(origin_paper, frozenset())
        bridge_to_papers = graph.baseline_to_papers
        paper_to_terminals = graph.paper_to_datasets
        gold = store.gold(origin_paper, EntityKind.DATASET)

    chains: list[InteractionChain] = []
    for bridge in bridges:
        for bridge_paper in bridge_to_papers.get(bridge, frozenset()):
            if bridge_paper == origin_paper:
                continue
            for terminal in paper_to_terminals.get(bridge_paper, frozenset()):
                if exclude_gold_terminals and terminal in gold:
                    continue
                chains.append(
                    InteractionChain(
                        origin_paper=origin_paper,
                        bridge_entity=bridge,
                        bridge_paper=bridge_paper,
                        terminal_entity=terminal,
                        direction=direction,
                        support=co_usage_count(graph, bridge, terminal),
                    )
                )
    chains.sort(key=lambda c: (-c.support, c.bridge_entity, c.terminal_entity, c.bridge_paper))
    return chains


def top_chains(
    chains: list[InteractionChain],
    candidate: str,
    store: CorpusStore,
    k: int = 3,
) -> ChainEvidence:
    """The <= k highest-support chains terminating at candidate.

    Ties at equal support prefer the more recent bridge paper, then the
    smaller bridge-paper id.
    """
    matching = [c for c in chains if c.terminal_entity == candidate]
    matching.sort(
        key=lambda c: (
            -c.support,
            -store.papers[c.bridge_paper].year,
            c.bridge_paper,
            c.bridge_entity,
        )
    )
    return ChainEvidence(candidate=candidate, chains=tuple(matching[:k]))


def chain_candidate_pool(
    graph: InteractionGraph,
    store: CorpusStore,
    origin_paper: str,
    direction: ChainDirection,
) -> tuple[frozenset[str], float, float]:
    """Distinct chain terminals plus this pool's recall/precision against gold."""
    kind = EntityKind.BASELINE if direction is ChainDirection.D_TO_B else EntityKind.DATASET
    gold = store.gold(origin_paper, kind)
    if not gold:
        raise DataError(f"undefined recall: paper {origin_paper} has no gold {kind.value}s")
    chains = enumerate_chains(graph, store, origin_paper, direction)
    pool = frozenset(c.terminal_entity for c in chains)
    overlap = len(pool & gold)
    recall = overlap / len(gold)
    precision = overlap / len(pool) if pool else 0.0
    return pool, recall, precision


@dataclass(frozen=True)
class PoolAnalysisRow:
    paper_id: str
    direction: ChainDirection
    pool_size: int
    gold_size: int
    recall: float
    precision: float


def analyze_chain_pools(
    graph: InteractionGraph,
    store: CorpusStore,
    split: list[str],
) -> list[PoolAnalysisRow]:
    """Chain-pool recall/precision per paper and direction across a split.

    Papers lacking a gold set for a direction are skipped for that
    direction.
    """
    rows: list[PoolAnalysisRow] = []
    for paper_id in split:
        if paper_id not in store.papers:
            raise DataError(f"unknown paper {paper_id}")
        for direction in (ChainDirection.D_TO_B, ChainDirection.B_TO_D):
            kind = EntityKind.BASELINE if direction is ChainDirection.D_TO_B else EntityKind.DATASET
            if not store.gold(paper_id, kind):
                continue
            pool, recall, precision = chain_candidate_pool(graph, store, paper_id, direction)
            rows.append(
                PoolAnalysisRow(
                    paper_id=paper_id,
                    direction=direction,
                    pool_size=len(pool),
                    gold_size=len(store.gold(paper_id, kind)),
                    recall=recall,
                    precision=precision,
                )
            )
    return rows


def mean_pool_metrics(rows: list[PoolAnalysisRow]) -> dict[ChainDirection, tuple[float, float]]:
    out: dict[ChainDirection, tuple[float, float]] = {}
    for direction in (ChainDirection.D_TO_B, ChainDirection.B_TO_D):
        sel = [r for r in rows if r.direction is direction]
        if sel:
            out[direction] = (
                sum(r.recall for r in sel) / len(sel),
                sum(r.precision for r in sel) / len(sel),
            )
    return out


def export_chains(chains: list[InteractionChain], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in chains:
            fh.write(
                json.dumps(
                    {
                        "origin": c.origin_paper,
                        "direction": c.direction.value,
                        "bridgeEntity": c.bridge_entity,
                        "bridgePaper": c.bridge_paper,
                        "terminal": c.terminal_entity,
                        "support": c.support,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
