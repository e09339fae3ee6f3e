"""Provider wire contract and its deterministic in-process mock.

All model-backed capabilities go through one small contract so a sidecar in
any language can stand in for the mock:

    POST /embed      {"texts": [...]}        -> {"dim": d, "vectors": [[...], ...]}
    POST /summarize  {"contexts": [...]}     -> {"summary": "..."}
    POST /rerank     {"prompt": "..."}       -> {"ranking": "RANKING: ...", "justification": "..."}
    POST /verify     {"entity_id", "canonical_name", "surface_form", "context"}
                                             -> {"approve": true|false}

Errors come back as {"code": ..., "message": ...}. The mock is a pure,
seed-free function of its inputs; golden request/response fixtures live in
fixtures/providers/.
"""

from __future__ import annotations

import hashlib
import re
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import ProviderError
from .textutils import extractive_summary, tokenize

DEFAULT_EMBED_DIM = 256

_CANDIDATE_LINE_RE = re.compile(r"^\[\d+\] id=(\S+)", re.MULTILINE)
_RANKING_LINE_RE = re.compile(r"^RANKING:\s*(.+?)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_base: str = "mock"
    timeout: float = 30.0
    max_in_flight: int = 4
    auth_token: str | None = None
    embed_dim: int = DEFAULT_EMBED_DIM
    retries: int = 2

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")


@dataclass(frozen=True)
class RerankResponse:
    ranking_line: str
    justification: str


def hashed_bow_vector(text: str, dim: int = DEFAULT_EMBED_DIM) -> np.ndarray:
    """The mock embedding: a hashed bag of words, L2-normalized.

    Tokens are lowercase ASCII [a-z0-9_]+ runs; each token is hashed with
    MD5, the first 8 digest bytes are read as a big-endian integer, and the
    token's count accrues to bucket (hash % dim). The count vector is then
    L2-normalized (an empty text stays the zero vector). Seed-free and
    stable across processes and languages.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        digest = hashlib.md5(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "big") % dim
        vec[bucket] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def parse_ranking_line(text: str) -> list[str]:
    """Extract the id sequence from the last RANKING line of a response."""
    matches = _RANKING_LINE_RE.findall(text)
    if not matches:
        raise ProviderError("response contains no RANKING line")
    ids = [part.strip() for part in matches[-1].split(">")]
    ids = [i for i in ids if i]
    if not ids:
        raise ProviderError("RANKING line carries no ids")
    return ids


def format_ranking_line(ids: list[str]) -> str:
    return "RANKING: " + " > ".join(ids)


class MockProvider:
    """Pure in-process provider; the whole primary suite runs against it."""

    def __init__(self, embed_dim: int = DEFAULT_EMBED_DIM):
        self.embed_dim = embed_dim

    def embed(self, texts: list[str]) -> np.ndarray:
        return np.stack([hashed_bow_vector(t, self.embed_dim) for t in texts]) if texts else np.zeros((0, self.embed_dim))

    def summarize(self, contexts: list[str]) -> str:
        return extractive_summary(contexts)

    def rerank(self, prompt: str) -> RerankResponse:
        ids = _CANDIDATE_LINE_RE.findall(prompt)
        if not ids:
            raise ProviderError("prompt lists no candidates")
        return RerankResponse(
            ranking_line=format_ranking_line(ids),
            justification="Kept the presented order; no overriding chain evidence.",
        )

    def verify(self, entity_id: str, canonical_name: str, surface_form: str, context: str) -> bool:
        # Approve when the surface form's tokens all occur in the canonical name.
        surface = set(tokenize(surface_form))
        canonical = set(tokenize(canonical_name))
        return bool(surface) and surface <= canonical


class HttpProvider:
    """Client for a sidecar implementing the wire contract."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self._semaphore = threading.Semaphore(config.max_in_flight)

    def _post(self, endpoint: str, payload: dict) -> dict:
        url = self.config.endpoint_base.rstrip("/") + endpoint
        headers = {}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        last_exc: Exception | None = None
        with self._semaphore:
            for attempt in range(self.config.retries + 1):
                try:
                    resp = requests.post(url, json=payload, timeout=self.config.timeout, headers=headers)
                except requests.RequestException as exc:
                    last_exc = exc
                    if attempt < self.config.retries:
                        time.sleep(min(0.2 * (attempt + 1), 1.0))
                    continue
                if resp.status_code != 200:
                    try:
                        body = resp.json()
                        message = f"{body.get('code')}: {body.get('message')}"
                    except ValueError:
                        message = resp.text[:200]
                    raise ProviderError(f"{endpoint} failed ({resp.status_code}) {message}")
                try:
                    return resp.json()
                except ValueError as exc:
                    raise ProviderError(f"{endpoint} returned non-JSON body") from exc
        raise ProviderError(f"{endpoint} unreachable after {self.config.retries + 1} attempts: {last_exc}")

    def embed(self, texts: list[str]) -> np.ndarray:
        body = self._post("/embed", {"texts": texts})
        try:
            dim = int(body["dim"])
            vectors = np.asarray(body["vectors"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError("malformed /embed response") from exc
        if vectors.ndim != 2 or vectors.shape != (len(texts), dim):
            raise ProviderError(
                f"/embed shape mismatch: expected ({len(texts)}, {dim}), got {vectors.shape}"
            )
        return vectors

    def summarize(self, contexts: list[str]) -> str:
        body = self._post("/summarize", {"contexts": contexts})
        if "summary" not in body:
            raise ProviderError("malformed /summarize response")
        return str(body["summary"])

    def rerank(self, prompt: str) -> RerankResponse:
        body = self._post("/rerank", {"prompt": prompt})
        if "ranking" not in body:
            raise ProviderError("malformed /rerank response")
        return RerankResponse(
            ranking_line=str(body["ranking"]),
            justification=str(body.get("justification", "")),
        )

    def verify(self, entity_id: str, canonical_name: str, surface_form: str, context: str) -> bool:
        body = self._post(
            "/verify",
            {
                "entity_id": entity_id,
                "canonical_name": canonical_name,
                "surface_form": surface_form,
                "context": context,
            },
        )
        if "approve" not in body:
            raise ProviderError("malformed /verify response")
        return bool(body["approve"])


Provider = MockProvider | HttpProvider


def get_provider(config: ProviderConfig) -> Provider:
    if config.endpoint_base == "mock":
        return MockProvider(embed_dim=config.embed_dim)
    return HttpProvider(config)
