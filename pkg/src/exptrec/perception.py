"""Citation-context windows, per-entity pooling, collective-perception
summaries, and fused target representations.

Only experiment-centric sections feed context windows; a window is the
mention sentence plus its neighbors within the configured radius.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import CorpusStore, EntityKind, Mention, PaperRecord, ResourceEntity, SectionKind
from .errors import DataError, ProviderError
from .textutils import extractive_summary, truncate_utf8

DESC_MARKER = "[DESC] "
CP_MARKER = " [CP] "

DEFAULT_RADIUS = 1
DEFAULT_TOP_N = 8
DEFAULT_BYTE_BUDGET = 2048
DEFAULT_DEDUP_JACCARD = 0.8


class SynthesisMethod(str, Enum):
    EXTERNAL = "external-summarizer"
    FALLBACK = "extractive-fallback"


@dataclass(frozen=True)
class CitationContext:
    entity_id: str
    paper_id: str
    window_text: str
    section_index: int
    center_sentence_index: int


@dataclass(frozen=True)
class ContextPool:
    entity_id: str
    contexts: tuple[CitationContext, ...]


@dataclass(frozen=True)
class CollectivePerception:
    entity_id: str
    summary_text: str
    evidence_count: int
    method: SynthesisMethod


@dataclass(frozen=True)
class TargetRepresentation:
    entity_id: str
    text: str


def extract_citation_contexts(
    paper: PaperRecord,
    entity: ResourceEntity,
    mentions: list[Mention],
    radius: int = DEFAULT_RADIUS,
) -> list[CitationContext]:
    """One window per distinct mention sentence in an experiment-centric section."""
    if radius < 0:
        raise DataError("radius must be >= 0")
    out: list[CitationContext] = []
    seen: set[tuple[int, int]] = set()
    for mention in mentions:
        if mention.paper_id != paper.paper_id or mention.entity_id != entity.entity_id:
            continue
        section = paper.sections[mention.section_index]
        if section.kind is not SectionKind.EXPERIMENT:
            continue
        key = (mention.section_index, mention.sentence_index)
        if key in seen:
            continue
        seen.add(key)
        lo = max(0, mention.sentence_index - radius)
        hi = min(len(section.sentences), mention.sentence_index + radius + 1)
        out.append(
            CitationContext(
                entity_id=entity.entity_id,
                paper_id=paper.paper_id,
                window_text=" ".join(section.sentences[lo:hi]),
                section_index=mention.section_index,
                center_sentence_index=mention.sentence_index,
            )
        )
    out.sort(key=lambda c: (c.section_index, c.center_sentence_index))
    return out


def pool_contexts(store: CorpusStore, entity_id: str, radius: int = DEFAULT_RADIUS) -> ContextPool:
    """Union of context windows over every paper mentioning the entity."""
    if entity_id not in store.entities:
        raise DataError(f"unknown entity {entity_id}")
    entity = store.entities[entity_id]
    contexts: list[CitationContext] = []
    seen: set[tuple[str, int, int]] = set()
    for paper_id in sorted(store.papers):
        paper = store.papers[paper_id]
        for ctx in extract_citation_contexts(paper, entity, store.mentions, radius):
            key = (ctx.paper_id, ctx.section_index, ctx.center_sentence_index)
            if key in seen:
                continue
            seen.add(key)
            contexts.append(ctx)
    contexts.sort(key=lambda c: (c.paper_id, c.section_index, c.center_sentence_index))
    return ContextPool(entity_id=entity_id, contexts=tuple(contexts))


def synthesize_perception(
    pool: ContextPool,
    summarizer=None,
    top_n: int = DEFAULT_TOP_N,
    byte_budget: int = DEFAULT_BYTE_BUDGET,
    dedup_jaccard: float = DEFAULT_DEDUP_JACCARD,
) -> CollectivePerception:
    """Summarize a context pool into the entity's collective perception.

    A configured summarizer receives the deduplicated pool; on provider
    failure (or no summarizer) the deterministic extractive fallback runs.
    """
    windows = [c.window_text for c in pool.contexts]
    if not windows:
        return CollectivePerception(pool.entity_id, "", 0, SynthesisMethod.FALLBACK)
    if summarizer is not None:
        deduped: list[str] = []
        seen: set[str] = set()
        for w in windows:
            if w not in seen:
                seen.add(w)
                deduped.append(w)
        try:
            summary = truncate_utf8(summarizer.summarize(deduped), byte_budget)
            return CollectivePerception(
                pool.entity_id, summary, len(windows), SynthesisMethod.EXTERNAL
            )
        except ProviderError:
            pass
    summary = extractive_summary(windows, top_n=top_n, byte_budget=byte_budget, dedup_jaccard=dedup_jaccard)
    return CollectivePerception(pool.entity_id, summary, len(windows), SynthesisMethod.FALLBACK)


def build_target_representation(
    entity: ResourceEntity, cp: CollectivePerception
) -> TargetRepresentation:
    """Fuse self-description and collective perception into one text."""
    if cp.entity_id != entity.entity_id:
        raise DataError(f"perception {cp.entity_id} does not match entity {entity.entity_id}")
    return TargetRepresentation(
        entity_id=entity.entity_id,
        text=DESC_MARKER + entity.description + CP_MARKER + cp.summary_text,
    )


def representation_text(description: str, summary: str, use_description: bool = True, use_cp: bool = True) -> str:
    """Representation layout with ablation toggles; at least one segment must be on."""
    if not use_description and not use_cp:
        raise DataError("at least one representation segment must be enabled")
    desc = description if use_description else ""
    cp = summary if use_cp else ""
    return DESC_MARKER + desc + CP_MARKER + cp


def split_representation(text: str) -> tuple[str, str]:
    """Recover (description, summary) from a fused representation."""
    if not text.startswith(DESC_MARKER) or CP_MARKER not in text:
        raise DataError("not a fused target representation")
    body = text[len(DESC_MARKER):]
    desc, _, summary = body.partition(CP_MARKER)
    return desc, summary


def build_perception_cache(
    store: CorpusStore,
    summarizer=None,
    radius: int = DEFAULT_RADIUS,
    kind: EntityKind | None = None,
) -> dict[str, CollectivePerception]:
    out: dict[str, CollectivePerception] = {}
    for entity_id in sorted(store.entities):
        if kind is not None and store.entities[entity_id].kind is not kind:
            continue
        pool = pool_contexts(store, entity_id, radius)
        out[entity_id] = synthesize_perception(pool, summarizer)
    return out


def save_perception_cache(cache: dict[str, CollectivePerception], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entity_id in sorted(cache):
            cp = cache[entity_id]
            fh.write(
                json.dumps(
                    {
                        "entityId": cp.entity_id,
                        "method": cp.method.value,
                        "evidenceCount": cp.evidence_count,
                        "summaryText": cp.summary_text,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_perception_cache(path: str | Path) -> dict[str, CollectivePerception]:
    cache: dict[str, CollectivePerception] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                cache[rec["entityId"]] = CollectivePerception(
                    entity_id=rec["entityId"],
                    summary_text=rec["summaryText"],
                    evidence_count=int(rec["evidenceCount"]),
                    method=SynthesisMethod(rec["method"]),
                )
            except (KeyError, ValueError) as exc:
                raise DataError(f"perception cache line {line_no}: malformed record") from exc
    return cache
