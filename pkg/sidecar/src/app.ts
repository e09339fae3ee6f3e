/**
 * HTTP wire contract:
 *
 *   POST /embed      {"texts": [...]}     -> {"dim": d, "vectors": [[...], ...]}
 *   POST /summarize  {"contexts": [...]}  -> {"summary": "..."}
 *   POST /rerank     {"prompt": "..."}    -> {"ranking": "RANKING: ...", "justification": "..."}
 *   POST /verify     {"entity_id", "canonical_name", "surface_form", "context"}
 *                                         -> {"approve": true|false}
 *
 * Errors are JSON bodies {"code": ..., "message": ...}.
 */

import express, { Express, Request, Response } from "express";

import { BackendError, DeterministicBackend } from "./backend";

function badRequest(res: Response, message: string): void {
  res.status(400).json({ code: "bad_request", message });
}

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((v) => typeof v === "string");
}

export function createApp(backend: DeterministicBackend = new DeterministicBackend()): Express {
  const app = express();
  app.use(express.json({ limit: "16mb" }));

  app.post("/embed", (req: Request, res: Response) => {
    const texts = req.body?.texts;
    if (!isStringArray(texts)) {
      return badRequest(res, 'expected {"texts": [string, ...]}');
    }
    res.json(backend.embed(texts));
  });

  app.post("/summarize", (req: Request, res: Response) => {
    const contexts = req.body?.contexts;
    if (!isStringArray(contexts)) {
      return badRequest(res, 'expected {"contexts": [string, ...]}');
    }
    res.json({ summary: backend.summarize(contexts) });
  });

  app.post("/rerank", (req: Request, res: Response) => {
    const prompt = req.body?.prompt;
    if (typeof prompt !== "string") {
      return badRequest(res, 'expected {"prompt": string}');
    }
    try {
      res.json(backend.rerank(prompt));
    } catch (err) {
      if (err instanceof BackendError) {
        return res.status(422).json({ code: err.code, message: err.message });
      }
      throw err;
    }
  });

  app.post("/verify", (req: Request, res: Response) => {
    const body = req.body ?? {};
    for (const field of ["entity_id", "canonical_name", "surface_form", "context"]) {
      if (typeof body[field] !== "string") {
        return badRequest(res, `expected string field ${field}`);
      }
    }
    res.json({ approve: backend.verify(body.canonical_name, body.surface_form) });
  });

  app.use((req: Request, res: Response) => {
    res.status(404).json({ code: "not_found", message: `no route ${req.method} ${req.path}` });
  });

  return app;
}
