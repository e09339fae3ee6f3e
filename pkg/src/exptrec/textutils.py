"""Tokenization and small text algorithms shared by several modules.

The tokenizer is deliberately ASCII-only and regex-based so that it can be
reimplemented bit-for-bit in other languages (the provider sidecar mirrors
it).
"""

from __future__ import annotations

import math
from collections import Counter

import re

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split into runs of ASCII alphanumerics/underscore."""
    return _TOKEN_RE.findall(text.lower())


def token_set(text: str) -> frozenset[str]:
    return frozenset(tokenize(text))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def truncate_utf8(text: str, byte_budget: int) -> str:
    """Truncate to at most byte_budget UTF-8 bytes without splitting a codepoint."""
    raw = text.encode("utf-8")
    if len(raw) <= byte_budget:
        return text
    return raw[:byte_budget].decode("utf-8", errors="ignore")


def extractive_summary(
    windows: list[str],
    top_n: int = 8,
    byte_budget: int = 2048,
    dedup_jaccard: float = 0.8,
) -> str:
    """Deterministic extractive summary of pooled context windows.

    Near-duplicate windows (token-set Jaccard >= dedup_jaccard against an
    already-kept window, scanning in pool order) are dropped. Surviving
    windows are scored by the mean inverse document frequency of their
    distinct tokens, computed over the deduplicated set; the top_n windows
    are joined in score order (ties keep pool order) and truncated to the
    byte budget.
    """
    if not windows:
        return ""
    kept: list[str] = []
    kept_sets: list[frozenset[str]] = []
    for w in windows:
        ts = token_set(w)
        if any(jaccard(ts, seen) >= dedup_jaccard for seen in kept_sets):
            continue
        kept.append(w)
        kept_sets.append(ts)

    n = len(kept)
    df: Counter[str] = Counter()
    for ts in kept_sets:
        df.update(ts)

    def score(ts: frozenset[str]) -> float:
        if not ts:
            return 0.0
        return sum(math.log(n / df[t]) for t in ts) / len(ts)

    order = sorted(range(n), key=lambda i: (-score(kept_sets[i]), i))[:top_n]
    return truncate_utf8(" ".join(kept[i] for i in order), byte_budget)
