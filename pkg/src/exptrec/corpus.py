"""Canonical data model and ingestion for the scholarly corpus.

The corpus lives in a line-delimited JSON file with two record kinds,
discriminated by a "type" field:

    {"type": "paper", "id", "title", "abstract", "venue", "year",
     "sections": [{"heading", "sentences": [...]}],
     "baselines": [entityId, ...], "datasets": [entityId, ...]}

    {"type": "entity", "id", "kind", "name", "aliases": [...],
     "description", "introducing_paper"?, "repo"?, "year"?}

Ids match [A-Za-z0-9_.-]+.  A fully ingested CorpusStore is immutable by
convention and safe for concurrent readers.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable

from .errors import DataError

_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

#: Case-folded substrings marking a section as experiment-centric.
EXPERIMENT_KEYWORDS = frozenset(
    {"experiment", "result", "evaluation", "ablation", "benchmark", "setup", "comparison"}
)

_SEPARATORS = str.maketrans({"-": " ", "_": " ", "/": " "})


class SectionKind(str, Enum):
    EXPERIMENT = "experiment-centric"
    OTHER = "other"


class EntityKind(str, Enum):
    BASELINE = "baseline"
    DATASET = "dataset"


def classify_section(heading: str, keywords: frozenset[str] = EXPERIMENT_KEYWORDS) -> SectionKind:
    """A heading is experiment-centric iff it contains any configured keyword."""
    folded = heading.casefold()
    if any(kw in folded for kw in keywords):
        return SectionKind.EXPERIMENT
    return SectionKind.OTHER


def normalize_name(raw: str) -> str:
    """Canonical form of an entity name.

    Case-folds, maps '-', '_', '/' to spaces, strips trailing punctuation,
    collapses whitespace. Idempotent. Raises DataError when nothing
    survives normalization.
    """
    text = raw.casefold().translate(_SEPARATORS)
    text = text.rstrip(string.punctuation + " \t\n")
    text = " ".join(text.split())
    if not text:
        raise DataError(f"empty canonical form for name {raw!r}")
    return text


@dataclass(frozen=True)
class Section:
    heading: str
    kind: SectionKind
    sentences: tuple[str, ...]


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    title: str
    abstract: str
    venue: str
    year: int
    sections: tuple[Section, ...]
    used_baselines: frozenset[str]
    used_datasets: frozenset[str]


@dataclass(frozen=True)
class ResourceEntity:
    entity_id: str
    kind: EntityKind
    canonical_name: str
    aliases: frozenset[str]
    description: str
    introducing_paper_id: str | None = None
    repo_link: str | None = None
    year: int | None = None


@dataclass(frozen=True)
class Mention:
    paper_id: str
    entity_id: str
    section_index: int
    sentence_index: int
    surface_form: str


@dataclass
class CorpusStore:
    papers: dict[str, PaperRecord]
    entities: dict[str, ResourceEntity]
    mentions: list[Mention]
    gold_sets: dict[str, tuple[frozenset[str], frozenset[str]]]

    def gold(self, paper_id: str, kind: EntityKind) -> frozenset[str]:
        baselines, datasets = self.gold_sets[paper_id]
        return baselines if kind is EntityKind.BASELINE else datasets

    def entities_of_kind(self, kind: EntityKind) -> list[ResourceEntity]:
        return sorted(
            (e for e in self.entities.values() if e.kind is kind),
            key=lambda e: e.entity_id,
        )


def _require(cond: bool, line_no: int, msg: str) -> None:
    if not cond:
        raise DataError(f"line {line_no}: {msg}")


def _parse_entity(rec: dict, line_no: int) -> ResourceEntity:
    for key in ("id", "kind", "name", "aliases", "description"):
        _require(key in rec, line_no, f"entity record missing field {key!r}")
    _require(bool(_ID_RE.match(rec["id"])), line_no, f"bad entity id {rec['id']!r}")
    try:
        kind = EntityKind(rec["kind"])
    except ValueError:
        raise DataError(f"line {line_no}: unknown entity kind {rec['kind']!r}") from None
    canonical = normalize_name(rec["name"])
    aliases = {normalize_name(a) for a in rec["aliases"]} | {canonical}
    return ResourceEntity(
        entity_id=rec["id"],
        kind=kind,
        canonical_name=canonical,
        aliases=frozenset(aliases),
        description=str(rec["description"]),
        introducing_paper_id=rec.get("introducing_paper"),
        repo_link=rec.get("repo"),
        year=rec.get("year"),
    )


def _parse_paper(rec: dict, line_no: int) -> PaperRecord:
    for key in ("id", "title", "abstract", "venue", "year", "sections", "baselines", "datasets"):
        _require(key in rec, line_no, f"paper record missing field {key!r}")
    _require(bool(_ID_RE.match(rec["id"])), line_no, f"bad paper id {rec['id']!r}")
    year = rec["year"]
    _require(isinstance(year, int) and 1900 <= year <= 2100, line_no, f"year {year!r} out of range")
    sections = tuple(
        Section(
            heading=s["heading"],
            kind=classify_section(s["heading"]),
            sentences=tuple(s["sentences"]),
        )
        for s in rec["sections"]
    )
    return PaperRecord(
        paper_id=rec["id"],
        title=rec["title"],
        abstract=rec["abstract"],
        venue=rec["venue"],
        year=year,
        sections=sections,
        used_baselines=frozenset(rec["baselines"]),
        used_datasets=frozenset(rec["datasets"]),
    )


def _find_mentions(papers: dict[str, PaperRecord], entities: dict[str, ResourceEntity]) -> list[Mention]:
    """Resolve entity mentions by alias scan over every sentence."""
    alias_patterns: list[tuple[str, str, re.Pattern[str]]] = []
    for entity in sorted(entities.values(), key=lambda e: e.entity_id):
        for alias in sorted(entity.aliases):
            pat = re.compile(rf"(?<!\w){re.escape(alias)}(?!\w)")
            alias_patterns.append((entity.entity_id, alias, pat))

    mentions: list[Mention] = []
    for paper in sorted(papers.values(), key=lambda p: p.paper_id):
        for si, section in enumerate(paper.sections):
            for ti, sentence in enumerate(section.sentences):
                norm = " ".join(sentence.casefold().translate(_SEPARATORS).split())
                seen: set[str] = set()
                for entity_id, alias, pat in alias_patterns:
                    if entity_id in seen:
                        continue
                    if pat.search(norm):
                        seen.add(entity_id)
                        mentions.append(Mention(paper.paper_id, entity_id, si, ti, alias))
    return mentions


def ingest_corpus(path: str | Path) -> CorpusStore:
    """Load, validate, and index a corpus file.

    Enforces unique ids, referential integrity of usage edges, and
    populates gold sets from the explicit usage fields. Mentions are
    resolved by alias scan at ingest time.
    """
    papers: dict[str, PaperRecord] = {}
    entities: dict[str, ResourceEntity] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: malformed record ({exc.msg})") from exc
            rtype = rec.get("type")
            if rtype == "paper":
                paper = _parse_paper(rec, line_no)
                _require(paper.paper_id not in papers, line_no, f"duplicate paper id {paper.paper_id}")
                papers[paper.paper_id] = paper
            elif rtype == "entity":
                entity = _parse_entity(rec, line_no)
                _require(entity.entity_id not in entities, line_no, f"duplicate entity id {entity.entity_id}")
                entities[entity.entity_id] = entity
            else:
                raise DataError(f"line {line_no}: unknown record type {rtype!r}")

    for paper in papers.values():
        for eid in sorted(paper.used_baselines | paper.used_datasets):
            if eid not in entities:
                raise DataError(f"dangling reference {paper.paper_id}→{eid}")
        for eid in sorted(paper.used_baselines):
            if entities[eid].kind is not EntityKind.BASELINE:
                raise DataError(f"paper {paper.paper_id} lists {eid} as baseline but it is a {entities[eid].kind.value}")
        for eid in sorted(paper.used_datasets):
            if entities[eid].kind is not EntityKind.DATASET:
                raise DataError(f"paper {paper.paper_id} lists {eid} as dataset but it is a {entities[eid].kind.value}")

    gold_sets = {
        p.paper_id: (p.used_baselines, p.used_datasets) for p in papers.values()
    }
    mentions = _find_mentions(papers, entities)
    return CorpusStore(papers=papers, entities=entities, mentions=mentions, gold_sets=gold_sets)


def export_corpus(store: CorpusStore, path: str | Path) -> None:
    """Write the canonical, byte-stable representation of a store."""
    with open(path, "w", encoding="utf-8") as fh:
        for entity in sorted(store.entities.values(), key=lambda e: e.entity_id):
            rec = {
                "type": "entity",
                "id": entity.entity_id,
                "kind": entity.kind.value,
                "name": entity.canonical_name,
                "aliases": sorted(entity.aliases),
                "description": entity.description,
            }
            if entity.introducing_paper_id is not None:
                rec["introducing_paper"] = entity.introducing_paper_id
            if entity.repo_link is not None:
                rec["repo"] = entity.repo_link
            if entity.year is not None:
                rec["year"] = entity.year
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n")
        for paper in sorted(store.papers.values(), key=lambda p: p.paper_id):
            rec = {
                "type": "paper",
                "id": paper.paper_id,
                "title": paper.title,
                "abstract": paper.abstract,
                "venue": paper.venue,
                "year": paper.year,
                "sections": [
                    {"heading": s.heading, "sentences": list(s.sentences)} for s in paper.sections
                ],
                "baselines": sorted(paper.used_baselines),
                "datasets": sorted(paper.used_datasets),
            }
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# Alias merging


def merge_aliases(entities: list[ResourceEntity]) -> tuple[list[ResourceEntity], list[str]]:
    """Merge entities whose normalized alias sets transitively intersect.

    The merged entity keeps the lexicographically smallest entityId, the
    union of aliases, the earliest year, and the longest description.
    Returns the merged entity list (sorted by id) and a human-readable
    merge log. Entities of different kind sharing an alias are an error.
    """
    parent = {e.entity_id: e.entity_id for e in entities}
    by_id = {e.entity_id: e for e in entities}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        if by_id[ra].kind is not by_id[rb].kind:
            raise DataError(f"cannot merge entities of different kind: {ra} and {rb}")
        if rb < ra:
            ra, rb = rb, ra
        parent[rb] = ra

    owner: dict[str, str] = {}
    for entity in sorted(entities, key=lambda e: e.entity_id):
        for alias in sorted(entity.aliases):
            if alias in owner:
                union(owner[alias], entity.entity_id)
            else:
                owner[alias] = entity.entity_id

    groups: dict[str, list[ResourceEntity]] = {}
    for entity in entities:
        groups.setdefault(find(entity.entity_id), []).append(entity)

    merged: list[ResourceEntity] = []
    log: list[str] = []
    for root in sorted(groups):
        members = sorted(groups[root], key=lambda e: e.entity_id)
        if len(members) == 1:
            merged.append(members[0])
            continue
        keeper_id = members[0].entity_id
        aliases = frozenset().union(*(m.aliases for m in members))
        years = [m.year for m in members if m.year is not None]
        description = min(
            (m.description for m in members),
            key=lambda d: (-len(d), d),
        )
        canonical = members[0].canonical_name
        intro = next((m.introducing_paper_id for m in members if m.introducing_paper_id), None)
        repo = next((m.repo_link for m in members if m.repo_link), None)
        merged.append(
            ResourceEntity(
                entity_id=keeper_id,
                kind=members[0].kind,
                canonical_name=canonical,
                aliases=aliases,
                description=description,
                introducing_paper_id=intro,
                repo_link=repo,
                year=min(years) if years else None,
            )
        )
        log.append(f"merged {', '.join(m.entity_id for m in members[1:])} into {keeper_id}")
    merged.sort(key=lambda e: e.entity_id)
    return merged, log


# ---------------------------------------------------------------------------
# Rule-based mention filtering


class FilterVerdict(str, Enum):
    KEEP = "keep"
    BORDERLINE = "borderline"
    DROP = "drop"


@dataclass(frozen=True)
class EntityStats:
    """Per-entity corpus statistics feeding the rule filter."""

    entity_id: str
    mention_count: int
    experiment_mention_count: int
    surface_forms: frozenset[str]
    consistent_naming: bool


@dataclass(frozen=True)
class FilterConfig:
    min_mentions: int = 2
    min_experiment_mentions: int = 1


def compute_entity_stats(store: CorpusStore) -> dict[str, EntityStats]:
    counts: dict[str, int] = {eid: 0 for eid in store.entities}
    exp_counts: dict[str, int] = {eid: 0 for eid in store.entities}
    forms: dict[str, set[str]] = {eid: set() for eid in store.entities}
    for mention in store.mentions:
        counts[mention.entity_id] += 1
        forms[mention.entity_id].add(mention.surface_form)
        paper = store.papers[mention.paper_id]
        if paper.sections[mention.section_index].kind is SectionKind.EXPERIMENT:
            exp_counts[mention.entity_id] += 1
    stats: dict[str, EntityStats] = {}
    for eid, entity in store.entities.items():
        # Consistent naming: every observed surface form normalizes into this
        # entity's alias set (so all forms map to one canonical name).
        normalized = {normalize_name(f) for f in forms[eid]} if forms[eid] else set()
        consistent = all(f in entity.aliases for f in normalized)
        stats[eid] = EntityStats(
            entity_id=eid,
            mention_count=counts[eid],
            experiment_mention_count=exp_counts[eid],
            surface_forms=frozenset(forms[eid]),
            consistent_naming=consistent,
        )
    return stats


def rule_filter(
    mention: Mention,
    stats: dict[str, EntityStats],
    config: FilterConfig = FilterConfig(),
) -> FilterVerdict:
    """Classify a mention as keep / borderline / drop from corpus statistics."""
    if mention.entity_id not in stats:
        raise DataError(f"unknown entity {mention.entity_id}")
    st = stats[mention.entity_id]
    if (
        st.mention_count >= config.min_mentions
        and st.experiment_mention_count >= config.min_experiment_mentions
        and st.consistent_naming
    ):
        return FilterVerdict.KEEP
    if st.experiment_mention_count == 0:
        return FilterVerdict.DROP
    return FilterVerdict.BORDERLINE


def apply_filter(
    store: CorpusStore,
    verifier: Callable[[Mention], bool] | None = None,
    config: FilterConfig = FilterConfig(),
) -> list[Mention]:
    """Filter the store's mentions; borderline ones survive on verifier approval."""
    stats = compute_entity_stats(store)
    kept: list[Mention] = []
    for mention in store.mentions:
        verdict = rule_filter(mention, stats, config)
        if verdict is FilterVerdict.KEEP:
            kept.append(mention)
        elif verdict is FilterVerdict.BORDERLINE and verifier is not None and verifier(mention):
            kept.append(mention)
    return kept
