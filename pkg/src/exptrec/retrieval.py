"""Stage-1 recall: instruction-formatted queries, dense similarity search
over fused target representations, a BM25 lexical baseline, and index
persistence.

Index file layout (little-endian): magic b"EXPTIDX1", uint32 dim,
uint32 count, then count ids (uint16 byte length + UTF-8 bytes), then
count*dim float32 rows in row-major order.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import EntityKind
from .errors import DataError
from .textutils import tokenize

DEFAULT_TEMPERATURE = 20.0
DEFAULT_SHORTLIST = 20
DEFAULT_TASK_INSTRUCTION = (
    "Given a research idea, retrieve relevant baseline methods or datasets "
    "that are most suitable."
)

_MAGIC = b"EXPTIDX1"


@dataclass(frozen=True)
class Query:
    query_id: str
    synopsis_text: str
    task_instruction: str = DEFAULT_TASK_INSTRUCTION
    source_paper_id: str | None = None

    def __post_init__(self) -> None:
        if not self.synopsis_text:
            raise DataError("query synopsis must be nonempty")


@dataclass(frozen=True)
class RankEntry:
    entity_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: tuple[RankEntry, ...]

    def ids(self) -> list[str]:
        return [e.entity_id for e in self.entries]

    def validate(self) -> None:
        ids = self.ids()
        if len(set(ids)) != len(ids):
            raise DataError("ranked list has duplicate ids")
        for i, entry in enumerate(self.entries):
            if entry.rank != i + 1:
                raise DataError("ranked list ranks are not contiguous from 1")
            if i and self.entries[i - 1].score < entry.score - 1e-12:
                raise DataError("ranked list scores are not nonincreasing")


@dataclass
class DenseIndex:
    entity_ids: list[str]
    matrix: np.ndarray  # one unit-norm row per entity
    dim: int
    kind: EntityKind | None = None


def format_query(query: Query) -> str:
    """Instruction-prefixed query text; candidate texts are never prefixed."""
    return f"Instruct: {query.task_instruction} Query: {query.synopsis_text}"


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """L2-normalize each row; a zero row is a degenerate embedding."""
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        row = int(np.argmin(norms))
        raise DataError(f"degenerate embedding: row {row} has zero norm")
    return matrix / norms[:, None]


def embed_texts(texts: list[str], provider) -> np.ndarray:
    """Embed texts through a provider; always L2-normalized locally."""
    if not texts:
        return np.zeros((0, 0))
    vectors = np.asarray(provider.embed(texts), dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(texts):
        raise DataError("provider returned a malformed embedding batch")
    return normalize_rows(vectors)


def build_dense_index(
    entity_ids: list[str],
    texts: list[str],
    provider,
    kind: EntityKind | None = None,
) -> DenseIndex:
    if len(entity_ids) != len(texts):
        raise DataError("entity_ids and texts length mismatch")
    if not entity_ids:
        return DenseIndex(entity_ids=[], matrix=np.zeros((0, 0)), dim=0, kind=kind)
    matrix = embed_texts(texts, provider)
    return DenseIndex(entity_ids=list(entity_ids), matrix=matrix, dim=matrix.shape[1], kind=kind)


def dense_search(
    index: DenseIndex,
    query_vec: np.ndarray,
    k: int,
    temperature: float = DEFAULT_TEMPERATURE,
    query_id: str = "q",
) -> RankedList:
    """Top-k entities by temperature-scaled inner product, id ascending on ties."""
    if k < 1:
        raise DataError("k must be >= 1")
    if temperature <= 0:
        raise DataError("temperature must be positive")
    if not index.entity_ids:
        return RankedList(query_id=query_id, entries=())
    query_vec = np.asarray(query_vec, dtype=np.float64).reshape(-1)
    if query_vec.shape[0] != index.dim:
        raise DataError(f"query dim {query_vec.shape[0]} != index dim {index.dim}")
    scores = temperature * (index.matrix @ query_vec)
    order = sorted(range(len(index.entity_ids)), key=lambda i: (-scores[i], index.entity_ids[i]))
    entries = tuple(
        RankEntry(entity_id=index.entity_ids[i], score=float(scores[i]), rank=r + 1)
        for r, i in enumerate(order[:k])
    )
    return RankedList(query_id=query_id, entries=entries)


def retrieve_shortlist(
    query: Query,
    index: DenseIndex,
    provider,
    k: int = DEFAULT_SHORTLIST,
    temperature: float = DEFAULT_TEMPERATURE,
    adapter=None,
) -> RankedList:
    """Dense shortlist of at most k candidates for the reranker."""
    vec = embed_texts([format_query(query)], provider)[0]
    if adapter is not None:
        from .adapter import apply_adapter

        vec = apply_adapter(adapter, vec)
    return dense_search(index, vec, k, temperature, query_id=query.query_id)


# ---------------------------------------------------------------------------
# BM25 lexical baseline


@dataclass
class Bm25Index:
    entity_ids: list[str]
    term_freqs: list[Counter]
    doc_lens: list[int]
    avg_len: float
    idf: dict[str, float]
    k1: float = 1.2
    b: float = 0.75


def build_bm25_index(entity_ids: list[str], texts: list[str], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    docs = [tokenize(t) for t in texts]
    n = len(docs)
    term_freqs = [Counter(d) for d in docs]
    doc_lens = [len(d) for d in docs]
    avg_len = (sum(doc_lens) / n) if n else 0.0
    df: Counter = Counter()
    for tf in term_freqs:
        df.update(tf.keys())
    idf = {t: math.log(1.0 + (n - d + 0.5) / (d + 0.5)) for t, d in df.items()}
    return Bm25Index(entity_ids=list(entity_ids), term_freqs=term_freqs, doc_lens=doc_lens, avg_len=avg_len, idf=idf, k1=k1, b=b)


def bm25_search(index: Bm25Index, query_text: str, k: int, query_id: str = "q") -> RankedList:
    """Standard BM25 over the representation texts; zero-score docs are dropped."""
    terms = tokenize(query_text)
    if not terms:
        raise DataError("empty query after tokenization")
    scored: list[tuple[float, str]] = []
    for i, tf in enumerate(index.term_freqs):
        if index.doc_lens[i] == 0:
            continue
        denom_norm = index.k1 * (1 - index.b + index.b * index.doc_lens[i] / index.avg_len)
        s = 0.0
        for t in terms:
            f = tf.get(t)
            if not f:
                continue
            s += index.idf[t] * f * (index.k1 + 1) / (f + denom_norm)
        if s > 0.0:
            scored.append((s, index.entity_ids[i]))
    scored.sort(key=lambda x: (-x[0], x[1]))
    entries = tuple(
        RankEntry(entity_id=eid, score=score, rank=r + 1) for r, (score, eid) in enumerate(scored[:k])
    )
    return RankedList(query_id=query_id, entries=entries)


# ---------------------------------------------------------------------------
# Persistence


def save_index(index: DenseIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", index.dim, len(index.entity_ids)))
        for eid in index.entity_ids:
            raw = eid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(index.matrix.astype("<f4").tobytes(order="C"))


def load_index(path: str | Path, kind: EntityKind | None = None) -> DenseIndex:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise DataError(f"{path}: not an index file")
        dim, count = struct.unpack("<II", fh.read(8))
        entity_ids: list[str] = []
        for _ in range(count):
            (length,) = struct.unpack("<H", fh.read(2))
            entity_ids.append(fh.read(length).decode("utf-8"))
        raw = fh.read(4 * dim * count)
        if len(raw) != 4 * dim * count:
            raise DataError(f"{path}: truncated index payload")
        matrix = np.frombuffer(raw, dtype="<f4").reshape(count, dim).astype(np.float64)
    return DenseIndex(entity_ids=entity_ids, matrix=matrix, dim=dim, kind=kind)
