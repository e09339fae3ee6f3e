"""Two-stage baseline/dataset recommendation for research ideas.

Stage 1 retrieves candidates with dense similarity over fused target
representations (self-description plus a collective-perception summary of
citation contexts); Stage 2 reranks the shortlist using interaction-chain
co-usage evidence.
"""

from .corpus import (
    CorpusStore,
    EntityKind,
    Mention,
    PaperRecord,
    ResourceEntity,
    Section,
    SectionKind,
    classify_section,
    export_corpus,
    ingest_corpus,
    merge_aliases,
    normalize_name,
    rule_filter,
)
from .errors import DataError, ExptrecError, ProviderError

__all__ = [
    "CorpusStore",
    "DataError",
    "EntityKind",
    "ExptrecError",
    "Mention",
    "PaperRecord",
    "ProviderError",
    "ResourceEntity",
    "Section",
    "SectionKind",
    "classify_section",
    "export_corpus",
    "ingest_corpus",
    "merge_aliases",
    "normalize_name",
    "rule_filter",
]

__version__ = "0.1.0"
