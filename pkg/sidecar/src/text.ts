/**
 * Tokenization and the extractive summarizer, bit-for-bit compatible with
 * the Python reference so recorded fixtures replay exactly.
 */

const TOKEN_RE = /[a-z0-9_]+/g;

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(TOKEN_RE) ?? [];
}

export function tokenSet(text: string): Set<string> {
  return new Set(tokenize(text));
}

export function jaccard(a: Set<string>, b: Set<string>): number {
  if (a.size === 0 && b.size === 0) return 1.0;
  let intersection = 0;
  for (const t of a) if (b.has(t)) intersection += 1;
  const union = a.size + b.size - intersection;
  return union === 0 ? 0.0 : intersection / union;
}

/** Truncate to at most byteBudget UTF-8 bytes without splitting a codepoint. */
export function truncateUtf8(text: string, byteBudget: number): string {
  const raw = Buffer.from(text, "utf-8");
  if (raw.length <= byteBudget) return text;
  let end = byteBudget;
  // Back off over UTF-8 continuation bytes so we never emit half a codepoint.
  while (end > 0 && (raw[end] & 0xc0) === 0x80) end -= 1;
  return raw.subarray(0, end).toString("utf-8");
}

export interface SummaryOptions {
  topN?: number;
  byteBudget?: number;
  dedupJaccard?: number;
}

/**
 * Deterministic extractive summary: drop near-duplicate windows (token-set
 * Jaccard against already-kept windows), score survivors by mean inverse
 * document frequency over the deduplicated set, join the topN in score
 * order (ties keep pool order), truncate to the byte budget.
 */
export function extractiveSummary(windows: string[], options: SummaryOptions = {}): string {
  const { topN = 8, byteBudget = 2048, dedupJaccard = 0.8 } = options;
  if (windows.length === 0) return "";

  const kept: string[] = [];
  const keptSets: Set<string>[] = [];
  for (const w of windows) {
    const ts = tokenSet(w);
    if (keptSets.some((seen) => jaccard(ts, seen) >= dedupJaccard)) continue;
    kept.push(w);
    keptSets.push(ts);
  }

  const n = kept.length;
  const df = new Map<string, number>();
  for (const ts of keptSets) {
    for (const t of ts) df.set(t, (df.get(t) ?? 0) + 1);
  }

  const scores = keptSets.map((ts) => {
    if (ts.size === 0) return 0.0;
    let sum = 0.0;
    for (const t of ts) sum += Math.log(n / (df.get(t) as number));
    return sum / ts.size;
  });

  const order = kept
    .map((_, i) => i)
    .sort((a, b) => scores[b] - scores[a] || a - b)
    .slice(0, topN);
  return truncateUtf8(order.map((i) => kept[i]).join(" "), byteBudget);
}
