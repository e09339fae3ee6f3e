"""Shared builders for hand-constructed corpora used across the test suite."""

from __future__ import annotations

import json
from pathlib import Path

from exptrec.corpus import CorpusStore, ingest_corpus


def entity_rec(
    eid: str,
    kind: str,
    name: str | None = None,
    aliases: tuple[str, ...] = (),
    description: str = "a generic artifact",
    year: int | None = None,
    introducing_paper: str | None = None,
) -> dict:
    rec = {
        "type": "entity",
        "id": eid,
        "kind": kind,
        "name": name or eid,
        "aliases": list(aliases),
        "description": description,
    }
    if year is not None:
        rec["year"] = year
    if introducing_paper is not None:
        rec["introducing_paper"] = introducing_paper
    return rec


def paper_rec(
    pid: str,
    baselines: tuple[str, ...] = (),
    datasets: tuple[str, ...] = (),
    year: int = 2020,
    abstract: str = "We study a problem.",
    sections: list[dict] | None = None,
    title: str | None = None,
) -> dict:
    if sections is None:
        sections = [
            {"heading": "Introduction", "sentences": ["An opening sentence."]},
            {"heading": "Experiments", "sentences": ["We run the evaluation."]},
        ]
    return {
        "type": "paper",
        "id": pid,
        "title": title or f"Paper {pid}",
        "abstract": abstract,
        "venue": "TestConf",
        "year": year,
        "sections": sections,
        "baselines": list(baselines),
        "datasets": list(datasets),
    }


def write_records(records: list[dict], path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def make_store(records: list[dict], tmp_path: Path, name: str = "corpus.jsonl") -> CorpusStore:
    return ingest_corpus(write_records(records, tmp_path / name))
