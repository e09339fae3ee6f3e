"""Operator command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .adapter import TrainBatch, TrainConfig, load_adapter, save_adapter, train_adapter
from .chains import analyze_chain_pools, build_graph, mean_pool_metrics
from .config import RunConfig, load_run_config
from .corpus import CorpusStore, EntityKind, export_corpus, ingest_corpus, merge_aliases
from .errors import DataError, ProviderError
from .evalharness import (
    PipelineConfig,
    PipelineToggles,
    ablation_run,
    build_kind_index,
    evaluate,
    rank_candidates,
)
from .perception import (
    build_perception_cache,
    load_perception_cache,
    save_perception_cache,
)
from .providers import get_provider
from .rerank import assemble_evidence
from .reports import write_chain_report, write_eval_report, write_loss_trace
from .retrieval import (
    Query,
    build_dense_index,
    embed_texts,
    format_query,
    load_index,
    save_index,
)
from .synthetic import SyntheticSpec, generate_corpus


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _read_split(path: str) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read split file {path}: {exc}") from exc


def _pipeline_config(cfg: RunConfig, args) -> PipelineConfig:
    toggles = PipelineToggles(
        collective_perception=not getattr(args, "no_cp", False),
        self_description=not getattr(args, "no_desc", False),
        chains=not getattr(args, "no_chains", False),
        reranker=getattr(args, "rerank", False),
    )
    return PipelineConfig(
        toggles=toggles,
        shortlist_k=cfg.shortlist_k,
        temperature=cfg.temperature,
        alpha=cfg.alpha,
        radius=cfg.radius,
        task_instruction=cfg.task_instruction,
    )


def _load_store(cfg: RunConfig) -> CorpusStore:
    if not cfg.corpus:
        raise DataError("no corpus file configured (use --corpus)")
    return ingest_corpus(cfg.corpus)


def _perception(cfg: RunConfig, store: CorpusStore, provider):
    if cfg.perception_cache and Path(cfg.perception_cache).exists():
        return load_perception_cache(cfg.perception_cache)
    return build_perception_cache(store, radius=cfg.radius)


def cmd_gen_synthetic(cfg: RunConfig, args) -> int:
    spec = SyntheticSpec(
        n_papers=args.papers,
        n_entities=args.entities,
        density=args.density,
        seed=cfg.seed,
        mode=args.mode,
    )
    generate_corpus(spec, args.out)
    print(f"wrote synthetic corpus ({args.papers} papers, {args.entities} entities) to {args.out}")
    return 0


def cmd_ingest(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    if args.merge_aliases:
        merged, log = merge_aliases(list(store.entities.values()))
        for line in log:
            print(line)
        store.entities = {e.entity_id: e for e in merged}
    print(
        f"ingested {len(store.papers)} papers, {len(store.entities)} entities, "
        f"{len(store.mentions)} mentions from {cfg.corpus}"
    )
    if args.export:
        export_corpus(store, args.export)
        print(f"canonical export written to {args.export}")
    return 0


def cmd_build_perception(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    provider = get_provider(cfg.provider_config())
    summarizer = provider if args.use_summarizer else None
    cache = build_perception_cache(store, summarizer=summarizer, radius=cfg.radius)
    out = args.out or cfg.perception_cache
    if not out:
        raise DataError("no output path for the perception cache (use --out)")
    save_perception_cache(cache, out)
    nonempty = sum(1 for cp in cache.values() if cp.summary_text)
    print(f"wrote perception cache for {len(cache)} entities ({nonempty} nonempty) to {out}")
    return 0


def cmd_build_index(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    provider = get_provider(cfg.provider_config())
    cache = _perception(cfg, store, provider)
    out_dir = Path(args.index_out_dir or cfg.index_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    pipeline = _pipeline_config(cfg, args)
    for kind in (EntityKind.BASELINE, EntityKind.DATASET):
        index = build_kind_index(store, kind, provider, pipeline, perception_cache=cache)
        path = out_dir / f"{kind.value}.idx"
        save_index(index, path)
        print(f"wrote {kind.value} index ({len(index.entity_ids)} entities, dim {index.dim}) to {path}")
    return 0


def cmd_train_adapter(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    provider = get_provider(cfg.provider_config())
    cache = _perception(cfg, store, provider)
    split = _read_split(args.split) if args.split else sorted(store.papers)

    pairs: list[tuple[str, str]] = []
    from .perception import representation_text

    for paper_id in split:
        paper = store.papers.get(paper_id)
        if paper is None:
            raise DataError(f"unknown paper {paper_id}")
        query = Query(query_id=paper_id, synopsis_text=paper.abstract, task_instruction=cfg.task_instruction)
        qtext = format_query(query)
        for eid in sorted(paper.used_baselines | paper.used_datasets):
            entity = store.entities[eid]
            ttext = representation_text(entity.description, cache[eid].summary_text if eid in cache else "")
            pairs.append((qtext, ttext))
    if len(pairs) < 2:
        raise DataError("need at least 2 training pairs")

    qvecs = embed_texts([q for q, _ in pairs], provider)
    tvecs = embed_texts([t for _, t in pairs], provider)
    batches = []
    bsz = max(2, cfg.batch_size)
    for lo in range(0, len(pairs) - 1, bsz):
        hi = min(lo + bsz, len(pairs))
        if hi - lo < 2:
            break
        batches.append(
            TrainBatch(
                query_vecs=qvecs[lo:hi],
                target_vecs=tvecs[lo:hi],
                labels=np.ones(hi - lo),
            )
        )
    train_cfg = TrainConfig(
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        seed=cfg.seed,
        lam=cfg.reg_weight,
        tau=cfg.temperature,
    )
    params, trace = train_adapter(batches, train_cfg)
    save_adapter(params, args.out)
    paths = write_loss_trace(trace, cfg.out_dir, fingerprint=cfg.fingerprint())
    print(f"trained adapter on {len(pairs)} pairs; checkpoint at {args.out}")
    print(f"loss {trace[0]:.4f} -> {trace[-1]:.4f}; trace at {paths[0]} and {paths[1]}")
    return 0


def cmd_query(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    provider = get_provider(cfg.provider_config())
    kind = EntityKind(args.kind)
    pipeline = _pipeline_config(cfg, args)

    if args.paper_id:
        paper = store.papers.get(args.paper_id)
        if paper is None:
            raise DataError(f"unknown paper {args.paper_id}")
        query = Query(
            query_id=args.paper_id,
            synopsis_text=paper.abstract,
            task_instruction=cfg.task_instruction,
            source_paper_id=args.paper_id,
        )
    elif args.text:
        query = Query(query_id="cli", synopsis_text=args.text, task_instruction=cfg.task_instruction)
    else:
        raise DataError("provide --text or --paper-id")

    index_path = Path(cfg.index_dir or ".") / f"{kind.value}.idx" if cfg.index_dir else None
    if index_path and index_path.exists():
        index = load_index(index_path, kind=kind)
    else:
        cache = _perception(cfg, store, provider)
        index = build_kind_index(store, kind, provider, pipeline, perception_cache=cache)

    adapter = load_adapter(args.adapter) if args.adapter else None
    graph = build_graph(store)
    pipeline = replace(pipeline, shortlist_k=max(pipeline.shortlist_k, args.k))
    client = provider if (args.rerank and cfg.provider != "mock") else None
    ranked = rank_candidates(store, graph, index, query, kind, provider, pipeline, client=client, adapter=adapter)

    shortlist = ranked.entries[: args.k]
    bundle = assemble_evidence(
        query,
        ranked,
        graph,
        store,
        kind,
    ) if ranked.entries else None
    if args.format == "json":
        payload = [
            {
                "rank": e.rank,
                "id": e.entity_id,
                "score": e.score,
                "name": store.entities[e.entity_id].canonical_name,
                "chains": len(bundle.per_candidate[e.entity_id].chains) if bundle else 0,
            }
            for e in shortlist
        ]
        print(json.dumps(payload, indent=2))
    else:
        print(f"top {len(shortlist)} {kind.value}s for query {query.query_id}:")
        for e in shortlist:
            evidence = bundle.per_candidate[e.entity_id] if bundle else None
            chain_note = ""
            if evidence and evidence.chains:
                top = evidence.chains[0]
                chain_note = f"  via {top.bridge_entity} (support={top.support})"
            print(f"  {e.rank:>2}. {e.entity_id:<12} score={e.score:9.4f}  {store.entities[e.entity_id].canonical_name}{chain_note}")
    return 0


def cmd_emit_sft(cfg: RunConfig, args) -> int:
    from .rerank import emit_sft_triplets

    store = _load_store(cfg)
    graph = build_graph(store)
    split = _read_split(args.split)
    written, skipped = emit_sft_triplets(store, graph, split, args.out, shortlist_cap=cfg.shortlist_k)
    print(f"wrote {written} triplets to {args.out} ({skipped} paper-kind pairs skipped: empty gold)")
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    provider = get_provider(cfg.provider_config())
    split = _read_split(args.split)
    pipeline = _pipeline_config(cfg, args)
    client = provider if (args.rerank and cfg.provider != "mock") else None
    fingerprint = cfg.fingerprint()
    if args.ablation:
        all_results = ablation_run(store, split, provider, base_config=pipeline, client=client)
        for label, results in sorted(all_results.items()):
            for r in results.values():
                r.fingerprint = fingerprint
            paths = write_eval_report(results, cfg.out_dir, stem=f"eval_{label.replace('+', '_')}")
            print(f"{label}: report at {paths[0]}")
    else:
        results = evaluate(store, pipeline, split, provider, client=client, fingerprint=fingerprint)
        paths = write_eval_report(results, cfg.out_dir)
        for kind, result in results.items():
            summary = "  ".join(f"R@{k}={v:.4f}" for k, v in sorted(result.mean_recall.items()))
            hits = "  ".join(f"HR@{k}={v:.4f}" for k, v in sorted(result.mean_hit.items()))
            print(f"{kind.value}: {summary}  {hits}  (excluded {result.excluded})")
        print(f"reports: {', '.join(str(p) for p in paths)}")
    return 0


def cmd_analyze_chains(cfg: RunConfig, args) -> int:
    store = _load_store(cfg)
    graph = build_graph(store)
    split = _read_split(args.split)
    rows = analyze_chain_pools(graph, store, split)
    paths = write_chain_report(rows, cfg.out_dir, fingerprint=cfg.fingerprint())
    for direction, (recall, precision) in mean_pool_metrics(rows).items():
        print(f"{direction.value}: mean pool recall {recall:.4f}, precision {precision:.4f}")
    print(f"reports: {', '.join(str(p) for p in paths)}")
    return 0


def _common_flags() -> argparse.ArgumentParser:
    """Global flags, accepted both before and after the subcommand."""
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--corpus", help="corpus JSONL file")
    common.add_argument("--perception-cache", dest="perception_cache", help="perception cache JSONL")
    common.add_argument("--index-dir", dest="index_dir", help="directory holding <kind>.idx files")
    common.add_argument("--out-dir", dest="out_dir", help="directory for reports and figures")
    common.add_argument("--provider", help='"mock" or a provider base URL')
    common.add_argument("--seed", type=int, help="global RNG seed")
    common.add_argument("--jobs", type=int, help="parallelism bound")
    common.add_argument("--temperature", type=float, help="similarity temperature")
    common.add_argument("--shortlist-k", dest="shortlist_k", type=int, help="Stage-1 shortlist size")
    common.add_argument("--alpha", type=float, help="fallback rerank blend weight")
    common.add_argument("--radius", type=int, help="context window radius in sentences")
    return common


def build_parser() -> _Parser:
    common = _common_flags()
    parser = _Parser(
        prog="exptrec",
        description="Baseline and dataset recommendation pipeline",
        parents=[common],
    )

    sub = parser.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    def add_parser(name: str, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.error = parser.error  # uniform exit code 1 on usage errors
        return p

    p = add_parser("gen-synthetic", help="generate a synthetic corpus file")
    p.add_argument("--papers", type=int, default=50)
    p.add_argument("--entities", type=int, default=40)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--mode", choices=("random", "retrieval", "perception", "chains"), default="random")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = add_parser("ingest", help="validate a corpus file")
    p.add_argument("--merge-aliases", action="store_true")
    p.add_argument("--export", help="write the canonical export here")
    p.set_defaults(func=cmd_ingest)

    p = add_parser("build-perception", help="build the collective-perception cache")
    p.add_argument("--out", help="cache output path")
    p.add_argument("--use-summarizer", action="store_true", help="summarize via the provider instead of the extractive fallback")
    p.set_defaults(func=cmd_build_perception)

    p = add_parser("build-index", help="build dense indexes per entity kind")
    p.add_argument("--out", dest="index_out_dir", help="output directory; defaults to --index-dir")
    p.add_argument("--no-cp", action="store_true")
    p.add_argument("--no-desc", action="store_true")
    p.set_defaults(func=cmd_build_index)

    p = add_parser("train-adapter", help="train the linear adapter on query/target pairs")
    p.add_argument("--split", help="paper ids file; defaults to all papers")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_train_adapter)

    p = add_parser("query", help="retrieve (and optionally rerank) for one query")
    p.add_argument("--kind", choices=("baseline", "dataset"), required=True)
    p.add_argument("--text", help="free-text research idea")
    p.add_argument("--paper-id", dest="paper_id", help="query by corpus paper id")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--adapter", help="adapter checkpoint to apply to the query embedding")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_query)

    p = add_parser("emit-sft", help="emit (Q,R,A) training triplets")
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_emit_sft)

    p = add_parser("evaluate", help="run metrics over a split")
    p.add_argument("--split", required=True)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--no-rerank", dest="rerank", action="store_false")
    p.add_argument("--no-cp", action="store_true")
    p.add_argument("--no-desc", action="store_true")
    p.add_argument("--no-chains", action="store_true")
    p.add_argument("--ablation", action="store_true", help="run every toggle combination")
    p.set_defaults(func=cmd_evaluate, rerank=True)

    p = add_parser("analyze-chains", help="chain-derived candidate pool analysis")
    p.add_argument("--split", required=True)
    p.set_defaults(func=cmd_analyze_chains)

    return parser


_CONFIG_FLAGS = (
    "corpus",
    "perception_cache",
    "index_dir",
    "out_dir",
    "provider",
    "seed",
    "jobs",
    "temperature",
    "shortlist_k",
    "alpha",
    "radius",
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {name: getattr(args, name, None) for name in _CONFIG_FLAGS}
        if getattr(args, "index_out_dir", None):
            overrides["index_dir"] = args.index_out_dir
        if getattr(args, "epochs", None):
            overrides["epochs"] = args.epochs
        cfg = load_run_config(getattr(args, "config", None), overrides)
        return args.func(cfg, args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
