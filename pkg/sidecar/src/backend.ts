/**
 * Deterministic provider backend. Mirrors the reference mock exactly so the
 * sidecar can be swapped in behind the wire contract without behavioral
 * drift: same embeddings, same summaries, same ranking grammar.
 */

import { DEFAULT_EMBED_DIM, embedBatch } from "./embedding";
import { extractiveSummary, tokenize } from "./text";

const CANDIDATE_LINE_RE = /^\[\d+\] id=(\S+)/gm;

export interface EmbedResponse {
  dim: number;
  vectors: number[][];
}

export interface RerankResult {
  ranking: string;
  justification: string;
}

export class BackendError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

export function formatRankingLine(ids: string[]): string {
  return "RANKING: " + ids.join(" > ");
}

export function parseCandidateIds(prompt: string): string[] {
  const ids: string[] = [];
  for (const match of prompt.matchAll(CANDIDATE_LINE_RE)) {
    ids.push(match[1]);
  }
  return ids;
}

export class DeterministicBackend {
  constructor(private readonly embedDim: number = DEFAULT_EMBED_DIM) {}

  embed(texts: string[]): EmbedResponse {
    return { dim: this.embedDim, vectors: embedBatch(texts, this.embedDim) };
  }

  summarize(contexts: string[]): string {
    return extractiveSummary(contexts);
  }

  rerank(prompt: string): RerankResult {
    const ids = parseCandidateIds(prompt);
    if (ids.length === 0) {
      throw new BackendError("empty_shortlist", "prompt lists no candidates");
    }
    return {
      ranking: formatRankingLine(ids),
      justification: "Kept the presented order; no overriding chain evidence.",
    };
  }

  verify(canonicalName: string, surfaceForm: string): boolean {
    const surface = new Set(tokenize(surfaceForm));
    const canonical = new Set(tokenize(canonicalName));
    if (surface.size === 0) return false;
    for (const t of surface) {
      if (!canonical.has(t)) return false;
    }
    return true;
  }
}
