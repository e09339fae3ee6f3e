/**
 * Hashed bag-of-words embedding: MD5 each token, read the first 8 digest
 * bytes big-endian, bucket by modulo, accumulate counts, L2-normalize.
 * Seed-free and bit-compatible with the Python reference.
 */

import { createHash } from "crypto";

import { tokenize } from "./text";

export const DEFAULT_EMBED_DIM = 256;

export function tokenBucket(token: string, dim: number): number {
  const digest = createHash("md5").update(token, "utf-8").digest();
  const value = digest.readBigUInt64BE(0);
  return Number(value % BigInt(dim));
}

export function hashedBowVector(text: string, dim: number = DEFAULT_EMBED_DIM): number[] {
  const vec = new Array<number>(dim).fill(0);
  for (const token of tokenize(text)) {
    vec[tokenBucket(token, dim)] += 1;
  }
  let sumSquares = 0;
  for (const v of vec) sumSquares += v * v;
  const norm = Math.sqrt(sumSquares);
  if (norm > 0) {
    for (let i = 0; i < dim; i += 1) vec[i] /= norm;
  }
  return vec;
}

export function embedBatch(texts: string[], dim: number = DEFAULT_EMBED_DIM): number[][] {
  return texts.map((t) => hashedBowVector(t, dim));
}
