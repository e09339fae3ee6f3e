"""Seeded synthetic corpus generator.

The real 100k-paper corpus is out of reach at desk scale, so tests and the
CLI work against generated corpora. Planted modes build corpora whose
correct answers are known by construction:

  random      usage edges sampled uniformly; density controls edges/paper
  retrieval   each paper's gold entities carry the paper's planted topic
              token in their descriptions, so the hashed-bag-of-words
              embedding ranks them strictly first
  perception  descriptions are identical filler; the planted token only
              reaches candidates through citation-context summaries
  chains      descriptions identical; chain co-usage support is the only
              signal separating gold from distractors
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

MODES = ("random", "retrieval", "perception", "chains")


@dataclass(frozen=True)
class SyntheticSpec:
    n_papers: int = 50
    n_entities: int = 40
    density: float = 0.05
    seed: int = 0
    mode: str = "random"

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise DataError(f"unknown synthetic mode {self.mode!r}")
        if self.n_papers < 1 or self.n_entities < 2:
            raise DataError("need at least 1 paper and 2 entities")


def _entity_record(eid: str, kind: str, idx: int, description: str) -> dict:
    name = f"{'method' if kind == 'baseline' else 'corpus'}-{idx:03d}"
    return {
        "type": "entity",
        "id": eid,
        "kind": kind,
        "name": name,
        "aliases": [name, name.replace("-", " v")],
        "description": description,
        "year": 2015 + idx % 10,
    }


def _paper_record(pid: str, idx: int, abstract: str, sentences: list[str], baselines: list[str], datasets: list[str]) -> dict:
    return {
        "type": "paper",
        "id": pid,
        "title": f"Study {idx:04d}",
        "abstract": abstract,
        "venue": "SynthConf",
        "year": 2015 + idx % 11,
        "sections": [
            {"heading": "Introduction", "sentences": [f"This paper presents study {idx:04d}."]},
            {"heading": "Experiments", "sentences": sentences},
        ],
        "baselines": sorted(baselines),
        "datasets": sorted(datasets),
    }


def _mention_sentence(alias: str, extra: str = "") -> str:
    prefix = f"{extra} " if extra else ""
    return f"{prefix}We evaluate {alias} under the shared protocol."


def generate_records(spec: SyntheticSpec) -> list[dict]:
    rng = random.Random(spec.seed)
    n_b = (spec.n_entities + 1) // 2
    n_d = spec.n_entities - n_b
    baseline_ids = [f"b{idx:03d}" for idx in range(n_b)]
    dataset_ids = [f"d{idx:03d}" for idx in range(n_d)]
    paper_ids = [f"p{idx:04d}" for idx in range(spec.n_papers)]

    if spec.mode == "random":
        return _generate_random(spec, rng, baseline_ids, dataset_ids, paper_ids)
    if spec.mode == "retrieval":
        return _generate_retrieval(spec, rng, baseline_ids, dataset_ids, paper_ids)
    if spec.mode == "perception":
        return _generate_perception(spec, rng, baseline_ids, dataset_ids, paper_ids)
    return _generate_chains(spec, baseline_ids, dataset_ids, paper_ids)


def _edges_per_paper(density: float, pool: int) -> int:
    return max(1, round(density * pool))


def _generate_random(spec, rng, baseline_ids, dataset_ids, paper_ids) -> list[dict]:
    records = [
        _entity_record(eid, "baseline", i, f"A reference implementation of approach {eid}.")
        for i, eid in enumerate(baseline_ids)
    ] + [
        _entity_record(eid, "dataset", i, f"A benchmark collection identified as {eid}.")
        for i, eid in enumerate(dataset_ids)
    ]
    alias = {r["id"]: r["name"] for r in records}
    kb = _edges_per_paper(spec.density, len(baseline_ids))
    kd = _edges_per_paper(spec.density, len(dataset_ids))
    for i, pid in enumerate(paper_ids):
        used_b = rng.sample(baseline_ids, min(kb, len(baseline_ids)))
        used_d = rng.sample(dataset_ids, min(kd, len(dataset_ids)))
        sentences = [_mention_sentence(alias[e]) for e in sorted(used_b + used_d)]
        abstract = f"We study task family t{rng.randrange(10)} with emphasis on setting s{rng.randrange(10)}."
        records.append(_paper_record(pid, i, abstract, sentences, used_b, used_d))
    return records


def _generate_retrieval(spec, rng, baseline_ids, dataset_ids, paper_ids) -> list[dict]:
    """Gold entities share a planted topic token with their paper's abstract."""
    gold_b_per_paper = min(3, max(1, len(baseline_ids) // (2 * len(paper_ids)) or 1))
    gold_d_per_paper = min(2, max(1, len(dataset_ids) // (2 * len(paper_ids)) or 1))
    records: list[dict] = []
    assigned_b: dict[str, list[str]] = {}
    assigned_d: dict[str, list[str]] = {}
    bi = di = 0
    for pi, pid in enumerate(paper_ids):
        topic = f"qtok{pi:04d}"
        assigned_b[pid] = []
        assigned_d[pid] = []
        for _ in range(gold_b_per_paper):
            if bi >= len(baseline_ids) // 2:
                break
            eid = baseline_ids[bi]
            records.append(
                _entity_record(eid, "baseline", bi, f"Approach built for {topic} problems, tuned on {topic} and {topic}.")
            )
            assigned_b[pid].append(eid)
            bi += 1
        for _ in range(gold_d_per_paper):
            if di >= len(dataset_ids) // 2:
                break
            eid = dataset_ids[di]
            records.append(
                _entity_record(eid, "dataset", di + len(baseline_ids), f"Benchmark covering {topic} scenarios with {topic} labels and {topic} splits.")
            )
            assigned_d[pid].append(eid)
            di += 1
    # Distractors carry disjoint tokens.
    for j in range(bi, len(baseline_ids)):
        records.append(_entity_record(baseline_ids[j], "baseline", j, f"Approach built for dtokb{j:04d} problems, tuned on dtokb{j:04d}."))
    for j in range(di, len(dataset_ids)):
        records.append(
            _entity_record(dataset_ids[j], "dataset", j + len(baseline_ids), f"Benchmark covering dtokd{j:04d} scenarios with dtokd{j:04d} labels.")
        )
    alias = {r["id"]: r["name"] for r in records}
    for pi, pid in enumerate(paper_ids):
        topic = f"qtok{pi:04d}"
        used_b = assigned_b[pid] or [baseline_ids[0]]
        used_d = assigned_d[pid] or [dataset_ids[0]]
        sentences = [_mention_sentence(alias[e]) for e in sorted(used_b + used_d)]
        records.append(
            _paper_record(
                pid,
                pi,
                f"An investigation of {topic} with a focus on {topic} evaluation.",
                sentences,
                used_b,
                used_d,
            )
        )
    return records


def _generate_perception(spec, rng, baseline_ids, dataset_ids, paper_ids) -> list[dict]:
    """Uninformative descriptions; the planted token travels via contexts only."""
    filler = "A generic research artifact with a standard configuration."
    records = [
        _entity_record(eid, "baseline", i, filler) for i, eid in enumerate(baseline_ids)
    ] + [
        _entity_record(eid, "dataset", i + len(baseline_ids), filler)
        for i, eid in enumerate(dataset_ids)
    ]
    alias = {r["id"]: r["name"] for r in records}
    # Gold comes from the high-id half of each inventory so that id-order
    # tie-breaking leaves it outside the top-k once the planted signal is
    # ablated away.
    half_b = max(1, len(baseline_ids) // 2)
    half_d = max(1, len(dataset_ids) // 2)
    records_papers: list[dict] = []
    for i, pid in enumerate(paper_ids):
        topic = f"qtok{i:04d}"
        gb = sorted(
            {
                baseline_ids[min(len(baseline_ids) - 1, half_b + (2 * i) % half_b)],
                baseline_ids[min(len(baseline_ids) - 1, half_b + (2 * i + 1) % half_b)],
            }
        )
        gd = [dataset_ids[min(len(dataset_ids) - 1, half_d + i % half_d)]]
        sentences = [_mention_sentence(alias[e], extra=f"{topic} {topic}") for e in sorted(gb + gd)]
        records_papers.append(
            _paper_record(
                pid,
                i,
                f"An investigation of {topic} with a focus on {topic} evaluation.",
                sentences,
                gb,
                gd,
            )
        )
    _ = rng
    return records + records_papers


def _generate_chains(spec, baseline_ids, dataset_ids, paper_ids) -> list[dict]:
    """Identical descriptions; only chain support separates gold baselines.

    Paper p0000 is the intended query paper: it uses dataset d000 and the
    two highest-id baselines. Bridge papers use d000 together with those
    gold baselines, giving them co-usage support, while low-id distractor
    baselines are used by papers sharing no resources with p0000.
    """
    filler = "A generic research artifact with a standard configuration."
    records = [
        _entity_record(eid, "baseline", i, filler) for i, eid in enumerate(baseline_ids)
    ] + [
        _entity_record(eid, "dataset", i + len(baseline_ids), filler)
        for i, eid in enumerate(dataset_ids)
    ]
    alias = {r["id"]: r["name"] for r in records}
    gold = baseline_ids[-2:]
    origin_ds = dataset_ids[0]
    papers: list[dict] = []

    def mk(pid_idx: int, used_b: list[str], used_d: list[str]) -> dict:
        sentences = [_mention_sentence(alias[e]) for e in sorted(used_b + used_d)]
        return _paper_record(paper_ids[pid_idx], pid_idx, f"Study of shared protocol {pid_idx}.", sentences, used_b, used_d)

    papers.append(mk(0, gold, [origin_ds]))
    n_bridges = max(2, (len(paper_ids) - 1) // 2)
    idx = 1
    for _ in range(n_bridges):
        if idx >= len(paper_ids):
            break
        papers.append(mk(idx, gold, [origin_ds]))
        idx += 1
    # Remaining papers use distractor baselines on a different dataset.
    j = 0
    while idx < len(paper_ids):
        distractor = baseline_ids[j % max(1, len(baseline_ids) - 2)]
        other_ds = dataset_ids[-1] if len(dataset_ids) > 1 else dataset_ids[0]
        papers.append(mk(idx, [distractor], [other_ds]))
        idx += 1
        j += 1
    return records + papers


def write_corpus(records: list[dict], path: str | Path) -> None:
    """Byte-stable corpus serialization."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n")


def generate_corpus(spec: SyntheticSpec, path: str | Path) -> None:
    write_corpus(generate_records(spec), path)
