import itertools

import pytest

from exptrec.chains import (
    ChainDirection,
    InteractionChain,
    analyze_chain_pools,
    build_graph,
    chain_candidate_pool,
    co_usage_count,
    enumerate_chains,
    mean_pool_metrics,
    top_chains,
)
from exptrec.errors import DataError
from exptrec.synthetic import SyntheticSpec, generate_corpus

from helpers import entity_rec, make_store, paper_rec
from exptrec.corpus import EntityKind, ingest_corpus


def _bridge_corpus(tmp_path):
    """p1 uses d1 and {b1}; p2, p3 bridge through d1 to further baselines."""
    records = [
        entity_rec("b1", "baseline"),
        entity_rec("b2", "baseline"),
        entity_rec("b3", "baseline"),
        entity_rec("d1", "dataset"),
        entity_rec("d2", "dataset"),
        paper_rec("p1", baselines=("b1",), datasets=("d1",), year=2020),
        paper_rec("p2", baselines=("b1", "b2"), datasets=("d1",), year=2021),
        paper_rec("p3", baselines=("b2", "b3"), datasets=("d1", "d2"), year=2019),
    ]
    return make_store(records, tmp_path)


def brute_force_chains(store, origin, direction):
    """Independent 4-level nested-loop chain enumeration."""
    papers = store.papers
    chains = []
    if direction is ChainDirection.D_TO_B:
        bridges_of = lambda p: papers[p].used_datasets
        terminals_of = lambda p: papers[p].used_baselines
    else:
        bridges_of = lambda p: papers[p].used_baselines
        terminals_of = lambda p: papers[p].used_datasets
    for bridge in bridges_of(origin):
        for bridge_paper in papers:
            if bridge_paper == origin or bridge not in bridges_of(bridge_paper):
                continue
            for terminal in terminals_of(bridge_paper):
                support = sum(
                    1
                    for p in papers
                    if bridge in bridges_of(p) and terminal in terminals_of(p)
                )
                chains.append(
                    InteractionChain(
                        origin_paper=origin,
                        bridge_entity=bridge,
                        bridge_paper=bridge_paper,
                        terminal_entity=terminal,
                        direction=direction,
                        support=support,
                    )
                )
    return chains


class TestGraph:
    def test_inverted_maps_mirror_usage(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        assert graph.baseline_to_papers["b1"] == frozenset({"p1", "p2"})
        assert graph.dataset_to_papers["d1"] == frozenset({"p1", "p2", "p3"})
        assert graph.paper_to_baselines["p3"] == frozenset({"b2", "b3"})

    def test_unused_entities_resolve_to_empty(self, tmp_path):
        records = [entity_rec("b9", "baseline"), paper_rec("p1")]
        graph = build_graph(make_store(records, tmp_path))
        assert graph.papers_using("b9") == frozenset()

    def test_unknown_entity_rejected(self, tmp_path):
        graph = build_graph(_bridge_corpus(tmp_path))
        with pytest.raises(DataError):
            graph.papers_using("ghost")


class TestCoUsage:
    def test_hand_counts(self, tmp_path):
        graph = build_graph(_bridge_corpus(tmp_path))
        assert co_usage_count(graph, "d1", "b1") == 2  # p1, p2
        assert co_usage_count(graph, "d1", "b2") == 2  # p2, p3
        assert co_usage_count(graph, "d2", "b1") == 0

    def test_symmetric_for_all_pairs(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        for x, y in itertools.combinations(sorted(store.entities), 2):
            assert co_usage_count(graph, x, y) == co_usage_count(graph, y, x)


class TestEnumerateChains:
    def test_matches_nested_loop_oracle_on_random_corpus(self, tmp_path):
        path = tmp_path / "synth.jsonl"
        generate_corpus(SyntheticSpec(n_papers=40, n_entities=30, density=0.1, seed=3), path)
        store = ingest_corpus(path)
        graph = build_graph(store)
        for origin in sorted(store.papers)[:10]:
            for direction in ChainDirection:
                got = enumerate_chains(graph, store, origin, direction)
                expected = brute_force_chains(store, origin, direction)
                assert sorted(got, key=repr) == sorted(expected, key=repr)

    def test_bridge_paper_never_equals_origin(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        chains = enumerate_chains(graph, store, "p2", ChainDirection.D_TO_B)
        assert all(c.bridge_paper != "p2" for c in chains)

    def test_gold_terminal_exclusion(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        gold = store.gold("p1", EntityKind.BASELINE)
        full = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B)
        pruned = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B, exclude_gold_terminals=True)
        assert {c.terminal_entity for c in full} & gold
        assert not {c.terminal_entity for c in pruned} & gold
        assert [c for c in full if c.terminal_entity not in gold] == pruned

    def test_sorted_by_support_descending(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        chains = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B)
        assert [c.support for c in chains] == sorted((c.support for c in chains), reverse=True)

    def test_unknown_origin_rejected(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        with pytest.raises(DataError):
            enumerate_chains(build_graph(store), store, "ghost", ChainDirection.D_TO_B)


class TestTopChains:
    def test_caps_at_k_and_filters_terminal(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        chains = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B)
        evidence = top_chains(chains, "b2", store, k=1)
        assert len(evidence.chains) == 1
        assert all(c.terminal_entity == "b2" for c in evidence.chains)

    def test_support_tie_prefers_recent_bridge_paper(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        chains = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B)
        evidence = top_chains(chains, "b2", store)
        # b2 is reachable via p2 (2021) and p3 (2019) with equal support.
        assert [c.bridge_paper for c in evidence.chains] == ["p2", "p3"]

    def test_missing_candidate_gives_empty_evidence(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        chains = enumerate_chains(graph, store, "p1", ChainDirection.D_TO_B)
        assert top_chains(chains, "never-seen", store).chains == ()


class TestCandidatePools:
    def test_hand_planted_recall_and_precision(self, tmp_path):
        records = [
            entity_rec("b1", "baseline"),
            entity_rec("b2", "baseline"),
            entity_rec("b3", "baseline"),
            entity_rec("b9", "baseline"),
            entity_rec("d1", "dataset"),
            paper_rec("p0", baselines=("b1", "b2", "b3"), datasets=("d1",)),
            paper_rec("p1", baselines=("b1", "b2", "b9"), datasets=("d1",)),
        ]
        store = make_store(records, tmp_path)
        graph = build_graph(store)
        pool, recall, precision = chain_candidate_pool(store=store, graph=graph, origin_paper="p0", direction=ChainDirection.D_TO_B)
        assert pool == frozenset({"b1", "b2", "b9"})
        assert recall == pytest.approx(2 / 3)
        assert precision == pytest.approx(2 / 3)

    def test_empty_gold_is_undefined(self, tmp_path):
        records = [
            entity_rec("d1", "dataset"),
            paper_rec("p0", datasets=("d1",)),
        ]
        store = make_store(records, tmp_path)
        with pytest.raises(DataError, match="undefined recall"):
            chain_candidate_pool(build_graph(store), store, "p0", ChainDirection.D_TO_B)

    def test_analysis_rows_and_means(self, tmp_path):
        store = _bridge_corpus(tmp_path)
        graph = build_graph(store)
        rows = analyze_chain_pools(graph, store, ["p1", "p2"])
        means = mean_pool_metrics(rows)
        d2b = [r for r in rows if r.direction is ChainDirection.D_TO_B]
        assert means[ChainDirection.D_TO_B][0] == pytest.approx(
            sum(r.recall for r in d2b) / len(d2b)
        )
        assert all(0.0 <= r.recall <= 1.0 and 0.0 <= r.precision <= 1.0 for r in rows)
