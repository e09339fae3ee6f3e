"""Acceptance gate: one test per top-level criterion, each emitting a single
[PASS]/[FAIL] line with its pinned tolerance and time budget enforced inline.

Full-scale leaderboard numbers need a ~100k-paper corpus and hosted models,
so the quantitative checks here run on planted synthetic corpora whose
correct answers are known by construction.
"""

import math
import random
import time

import numpy as np
import pytest

from exptrec.adapter import AdapterParams, TrainBatch, TrainConfig, batch_loss, loss, loss_gradient, train_adapter
from exptrec.chains import ChainDirection, InteractionChain, analyze_chain_pools, build_graph, co_usage_count, enumerate_chains
from exptrec.cli import main
from exptrec.corpus import EntityKind, ingest_corpus
from exptrec.evalharness import PipelineConfig, PipelineToggles, evaluate, hitrate_at_k, recall_at_k
from exptrec.providers import MockProvider
from exptrec.retrieval import RankedList, RankEntry
from exptrec.synthetic import SyntheticSpec, generate_corpus

from helpers import entity_rec, make_store, paper_rec
from test_adapter import finite_difference_gradient, mp_loss


def _criterion(name, body):
    try:
        body()
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _ranked(ids):
    return RankedList(
        "q", tuple(RankEntry(eid, float(len(ids) - i), i + 1) for i, eid in enumerate(ids))
    )


def test_metric_oracle_equivalence():
    def body():
        start = time.monotonic()
        rng = random.Random(101)
        universe = [f"e{i}" for i in range(60)]
        for _ in range(1000):
            ranked_ids = rng.sample(universe, rng.randint(1, 40))
            gold = set(rng.sample(universe, rng.randint(1, 12)))
            k = rng.randint(1, 50)
            ranked = _ranked(ranked_ids)
            top = set(ranked_ids[:k])
            assert recall_at_k(ranked, gold, k) == len(top & gold) / len(gold)  # exact
            assert hitrate_at_k(ranked, gold, k) == (1 if top & gold else 0)
        assert time.monotonic() - start < 5.0

    _criterion("metric oracle equivalence (1000 instances, exact, <5s)", body)


def test_metric_laws():
    def body():
        rng = random.Random(202)
        universe = [f"e{i}" for i in range(40)]
        for _ in range(1000):
            ranked_ids = rng.sample(universe, rng.randint(1, 25))
            gold = set(rng.sample(universe, rng.randint(1, 10)))
            ranked = _ranked(ranked_ids)
            prev = -1.0
            for k in range(1, 30):
                r = recall_at_k(ranked, gold, k)
                assert r >= prev, "recall must be monotone in k"
                assert (hitrate_at_k(ranked, gold, k) == 1) == (r > 0)
                prev = r

    _criterion("metric laws: monotone recall, hit iff recall>0 (1000 instances)", body)


def _brute_force_chains(store, origin, direction):
    papers = store.papers
    if direction is ChainDirection.D_TO_B:
        bridges_of = lambda p: papers[p].used_datasets
        terminals_of = lambda p: papers[p].used_baselines
    else:
        bridges_of = lambda p: papers[p].used_baselines
        terminals_of = lambda p: papers[p].used_datasets
    out = []
    for bridge in bridges_of(origin):
        for bridge_paper in papers:
            if bridge_paper == origin or bridge not in bridges_of(bridge_paper):
                continue
            for terminal in terminals_of(bridge_paper):
                support = sum(
                    1 for p in papers if bridge in bridges_of(p) and terminal in terminals_of(p)
                )
                out.append(
                    InteractionChain(origin, bridge, bridge_paper, terminal, direction, support)
                )
    return out


def test_chain_oracle():
    def body(tmp_base):
        start = time.monotonic()
        rng = random.Random(7)
        for seed in range(20):
            path = tmp_base / f"chains{seed}.jsonl"
            generate_corpus(
                SyntheticSpec(n_papers=200, n_entities=80, density=0.05, seed=seed), path
            )
            store = ingest_corpus(path)
            graph = build_graph(store)
            origins = rng.sample(sorted(store.papers), 10)
            for origin in origins:
                for direction in ChainDirection:
                    got = enumerate_chains(graph, store, origin, direction)
                    expected = _brute_force_chains(store, origin, direction)
                    assert sorted(got, key=repr) == sorted(expected, key=repr)  # multisets
            # Spot-check co-usage symmetry and counts against raw scans.
            for x, y in zip(rng.sample(sorted(store.entities), 8), rng.sample(sorted(store.entities), 8)):
                brute = sum(
                    1
                    for p in store.papers.values()
                    if x in (p.used_baselines | p.used_datasets)
                    and y in (p.used_baselines | p.used_datasets)
                )
                assert co_usage_count(graph, x, y) == brute
                assert co_usage_count(graph, y, x) == brute
        assert time.monotonic() - start < 30.0

    _with_tmp("chain enumeration matches nested-loop oracle (20 seeds, exact, <30s)", body)


def _with_tmp(name, body):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as tmp:
        _criterion(name, lambda: body(Path(tmp)))


def test_loss_kernel():
    def body():
        start = time.monotonic()
        rng = np.random.default_rng(31)
        for _ in range(100):
            b = int(rng.integers(2, 6))
            S = rng.uniform(-15.0, 15.0, size=(b, b))
            y = rng.integers(0, 2, size=b).astype(float)
            lam = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
            assert abs(loss(S, y, lam) - mp_loss(S, y, lam)) <= 1e-10
        dim = 4
        for _ in range(100):
            b = int(rng.integers(2, 5))
            params = AdapterParams(
                W=np.eye(dim) + 0.1 * rng.normal(size=(dim, dim)),
                tau=float(rng.uniform(1.0, 20.0)),
                lam=float(rng.choice([0.0, 0.5, 1.0])),
            )
            batch = TrainBatch(
                query_vecs=rng.normal(size=(b, dim)),
                target_vecs=rng.normal(size=(b, dim)),
                labels=rng.integers(0, 2, size=b).astype(float),
            )
            analytic = loss_gradient(params, batch)
            numeric = finite_difference_gradient(params, batch)
            rel = np.linalg.norm(analytic - numeric) / max(1.0, np.linalg.norm(numeric))
            assert rel <= 1e-4
        assert time.monotonic() - start < 60.0

    _criterion("loss kernel: mpmath oracle <=1e-10, gradient FD <=1e-4 (<60s)", body)


def test_closed_form_loss_points():
    def body():
        assert abs(loss(np.zeros((1, 1)), np.array([1.0]), lam=0.0) - math.log(2)) <= 1e-9
        assert abs(loss(np.zeros((2, 2)), np.zeros(2), lam=1.0) - 2 * math.log(2)) <= 1e-9

    _criterion("closed-form loss points: ln 2 and 2 ln 2 (<=1e-9)", body)


def test_training_sanity():
    def body():
        start = time.monotonic()
        eye = np.eye(4)
        data = [TrainBatch(query_vecs=eye, target_vecs=eye, labels=np.ones(4))]
        config = TrainConfig(learning_rate=0.05, epochs=50, seed=0)
        params, trace = train_adapter(data, config)
        assert trace[-1] < 0.5 * trace[0]
        params2, trace2 = train_adapter(data, config)
        assert np.array_equal(params.W, params2.W) and trace == trace2  # deterministic
        assert time.monotonic() - start < 60.0

    _criterion("training sanity: final loss < 0.5x initial in 50 epochs, deterministic (<60s)", body)


def test_planted_retrieval():
    def body(tmp):
        start = time.monotonic()
        path = tmp / "retrieval.jsonl"
        generate_corpus(SyntheticSpec(n_papers=8, n_entities=100, mode="retrieval", seed=0), path)
        store = ingest_corpus(path)
        config = PipelineConfig(
            toggles=PipelineToggles(reranker=False), recall_ks=(20,), hit_ks=(5,)
        )
        results = evaluate(store, config, sorted(store.papers), MockProvider())
        assert results[EntityKind.BASELINE].mean_recall[20] == 1.0  # exact
        assert results[EntityKind.DATASET].mean_recall[20] == 1.0
        assert time.monotonic() - start < 60.0

    _with_tmp("planted retrieval: Stage-1 Recall@20 = 1.0 exactly (<60s)", body)


def test_planted_reranking():
    def body(tmp):
        start = time.monotonic()
        path = tmp / "chains.jsonl"
        generate_corpus(SyntheticSpec(n_papers=12, n_entities=32, mode="chains", seed=0), path)
        store = ingest_corpus(path)
        # Descriptions are identical and CP is off, so retrieval scores tie;
        # chain support is the only signal separating gold from distractors.
        base = dict(recall_ks=(20,), hit_ks=(5,))
        rerank_cfg = PipelineConfig(
            toggles=PipelineToggles(collective_perception=False), **base
        )
        retrieval_cfg = PipelineConfig(
            toggles=PipelineToggles(collective_perception=False, reranker=False), **base
        )
        with_rerank = evaluate(store, rerank_cfg, ["p0000"], MockProvider())
        without = evaluate(store, retrieval_cfg, ["p0000"], MockProvider())
        assert with_rerank[EntityKind.BASELINE].mean_hit[5] == 1.0
        assert without[EntityKind.BASELINE].mean_hit[5] < 1.0
        # Reranking permutes the shortlist, so Recall@20 must not change.
        assert (
            with_rerank[EntityKind.BASELINE].mean_recall[20]
            == without[EntityKind.BASELINE].mean_recall[20]
        )
        assert time.monotonic() - start < 60.0

    _with_tmp(
        "planted reranking: rerank HitRate@5 = 1.0, retrieval-only < 1.0, Recall@20 invariant (<60s)",
        body,
    )


def test_pool_analysis_matches_planted_values(tmp_path):
    def body():
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
        rows = analyze_chain_pools(build_graph(store), store, ["p0"])
        by_dir = {r.direction: r for r in rows}
        # Planted: D->B pool {b1,b2,b9} against gold {b1,b2,b3}.
        assert by_dir[ChainDirection.D_TO_B].recall == 2 / 3
        assert by_dir[ChainDirection.D_TO_B].precision == 2 / 3
        # Planted: B->D pool {d1} against gold {d1}.
        assert by_dir[ChainDirection.B_TO_D].recall == 1.0
        assert by_dir[ChainDirection.B_TO_D].precision == 1.0
        # Context only, not reproduced at this scale: full-scale runs report
        # pool recall around 60.14% (baselines) and 78.61% (datasets).

    _criterion("chain-pool analysis equals hand-computed planted recall/precision (exact)", body)


def test_ablation_direction_collective_perception():
    def body(tmp):
        path = tmp / "perception.jsonl"
        generate_corpus(SyntheticSpec(n_papers=4, n_entities=60, mode="perception", seed=0), path)
        store = ingest_corpus(path)
        base = dict(recall_ks=(20,), hit_ks=(5,))
        on = PipelineConfig(toggles=PipelineToggles(reranker=False), **base)
        off = PipelineConfig(
            toggles=PipelineToggles(collective_perception=False, reranker=False), **base
        )
        split = sorted(store.papers)
        with_cp = evaluate(store, on, split, MockProvider())
        without_cp = evaluate(store, off, split, MockProvider())
        # Descriptions are identical filler; the discriminative token reaches
        # a candidate only through its citation-context summary.
        assert (
            with_cp[EntityKind.BASELINE].mean_recall[20]
            > without_cp[EntityKind.BASELINE].mean_recall[20]
        )

    _with_tmp("ablation direction: CP-on strictly beats CP-off on Recall@20", body)


def test_end_to_end_cli_smoke(tmp_path):
    def body():
        start = time.monotonic()
        corpus = tmp_path / "corpus.jsonl"
        cache = tmp_path / "cp.jsonl"
        idx = tmp_path / "idx"
        reports = tmp_path / "reports"
        split = tmp_path / "split.txt"
        base = ["--corpus", str(corpus), "--out-dir", str(reports)]
        assert main(["gen-synthetic", "--papers", "12", "--entities", "30", "--seed", "1", "--out", str(corpus)]) == 0
        assert main(["ingest", *base]) == 0
        assert main(["build-perception", *base, "--out", str(cache)]) == 0
        assert main(["build-index", *base, "--perception-cache", str(cache), "--out", str(idx)]) == 0
        assert main(["query", *base, "--index-dir", str(idx), "--kind", "baseline", "--text", "shared protocol study", "--k", "5"]) == 0
        split.write_text("".join(f"p{i:04d}\n" for i in range(12)))
        assert main(["evaluate", *base, "--perception-cache", str(cache), "--split", str(split)]) == 0
        assert (reports / "eval.tsv").exists() and (reports / "eval.png").exists()
        assert time.monotonic() - start < 120.0

    _criterion("end-to-end CLI smoke: generate->ingest->perception->index->query->evaluate (<2min)", body)
