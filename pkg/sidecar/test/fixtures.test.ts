/**
 * Golden-fixture conformance: the sidecar's deterministic backend must
 * reproduce the recorded request/response pairs in ../fixtures/providers/.
 */

import { readFileSync } from "fs";
import { join } from "path";

import { describe, expect, it } from "vitest";

import { DeterministicBackend } from "../src/backend";
import { hashedBowVector } from "../src/embedding";

const FIXTURE_DIR = join(__dirname, "..", "..", "fixtures", "providers");

function loadFixture(name: string) {
  return JSON.parse(readFileSync(join(FIXTURE_DIR, `${name}.json`), "utf-8"));
}

describe("golden fixtures", () => {
  it("reproduces the /embed fixture exactly", () => {
    const fx = loadFixture("embed");
    const backend = new DeterministicBackend(fx.response.dim);
    const out = backend.embed(fx.request.texts);
    expect(out.dim).toBe(fx.response.dim);
    expect(out.vectors.length).toBe(fx.response.vectors.length);
    for (let i = 0; i < out.vectors.length; i += 1) {
      for (let j = 0; j < out.dim; j += 1) {
        expect(out.vectors[i][j]).toBeCloseTo(fx.response.vectors[i][j], 15);
      }
    }
  });

  it("reproduces the /summarize fixture byte-for-byte", () => {
    const fx = loadFixture("summarize");
    const backend = new DeterministicBackend();
    expect(backend.summarize(fx.request.contexts)).toBe(fx.response.summary);
  });

  it("reproduces the /rerank fixture ranking and justification", () => {
    const fx = loadFixture("rerank");
    const backend = new DeterministicBackend();
    const out = backend.rerank(fx.request.prompt);
    expect(out.ranking).toBe(fx.response.ranking);
    expect(out.justification).toBe(fx.response.justification);
  });

  it("reproduces the /verify fixture decision", () => {
    const fx = loadFixture("verify");
    const backend = new DeterministicBackend();
    expect(backend.verify(fx.request.canonical_name, fx.request.surface_form)).toBe(
      fx.response.approve,
    );
  });
});

describe("embedding determinism", () => {
  it("is identical across repeated calls", () => {
    const texts = ["graph pruning for LLM inference", "another distinct text", ""];
    const a = texts.map((t) => hashedBowVector(t, 128));
    const b = texts.map((t) => hashedBowVector(t, 128));
    expect(a).toStrictEqual(b);
  });

  it("is unit norm for non-empty text and zero for tokenless text", () => {
    const v = hashedBowVector("some words here", 64);
    const norm = Math.sqrt(v.reduce((s, x) => s + x * x, 0));
    expect(norm).toBeCloseTo(1.0, 12);
    expect(hashedBowVector("!!!", 64).every((x) => x === 0)).toBe(true);
  });
});
