/**
 * ndjson-over-HTTP serving of the trained scorers.
 *
 * POST /score  — sentence-relevance requests:
 *   {"id", "question", "paragraph_tokens", "segment_ids", "answer_mode"}
 *   -> {"id", "logit"}; answer_mode "mask" routes to the no-answer model,
 *   "text" to the answer-conditioned model (the answer string arrives
 *   appended to the question field). A malformed line yields a per-id
 *   error object and the stream continues.
 *
 * POST /span   — {"id", "token_ids"} -> {"id", "start_logits", "end_logits"}.
 * GET  /health — version plus the loaded model hashes.
 *
 * Requests are stateless; models are read-only after load, so concurrent
 * requests are safe and identical requests yield identical logits.
 */

import { createServer as createHttpServer, IncomingMessage, Server, ServerResponse } from "node:http";

import { Artifact, artifactHash, deserializeScorer, deserializeSpan, ScorerModel, SpanModel } from "./model.js";
import { tokenize } from "./tokenizer.js";

export const SERVICE_VERSION = "0.1.0";

export interface LoadedModels {
  na?: { model: ScorerModel; hash: string };
  a?: { model: ScorerModel; hash: string };
  span?: { model: SpanModel; hash: string };
}

export function loadModels(artifacts: {
  na?: Artifact;
  a?: Artifact;
  span?: Artifact;
}): LoadedModels {
  const loaded: LoadedModels = {};
  if (artifacts.na) {
    loaded.na = { model: deserializeScorer(artifacts.na), hash: artifactHash(artifacts.na) };
  }
  if (artifacts.a) {
    loaded.a = { model: deserializeScorer(artifacts.a), hash: artifactHash(artifacts.a) };
  }
  if (artifacts.span) {
    loaded.span = { model: deserializeSpan(artifacts.span), hash: artifactHash(artifacts.span) };
  }
  return loaded;
}

function readBody(req: IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

function isIntArray(value: unknown, max: number): value is number[] {
  return (
    Array.isArray(value) &&
    value.every((v) => Number.isInteger(v) && v >= 0 && v < max)
  );
}

function scoreLine(line: string, models: LoadedModels): Record<string, unknown> {
  let req: any;
  try {
    req = JSON.parse(line);
  } catch {
    return { id: null, error: "unparseable JSON line" };
  }
  const id = typeof req?.id === "string" ? req.id : null;
  if (id === null) return { id: null, error: "missing string id" };
  if (req.answer_mode !== "mask" && req.answer_mode !== "text") {
    return { id, error: 'answer_mode must be "mask" or "text"' };
  }
  const entry = req.answer_mode === "mask" ? models.na : models.a;
  if (!entry) return { id, error: `no ${req.answer_mode}-mode model loaded` };
  const { model } = entry;
  if (typeof req.question !== "string") return { id, error: "question must be a string" };
  if (!isIntArray(req.paragraph_tokens, model.vocab.size)) {
    return { id, error: "paragraph_tokens must be vocab-range integers" };
  }
  if (
    !Array.isArray(req.segment_ids) ||
    req.segment_ids.length !== req.paragraph_tokens.length ||
    !req.segment_ids.every((v: unknown) => v === 0 || v === 1)
  ) {
    return { id, error: "segment_ids must be 0/1 and align with paragraph_tokens" };
  }
  const questionIds = tokenize(req.question, model.vocab);
  const targetIds = req.paragraph_tokens.filter(
    (_: number, i: number) => req.segment_ids[i] === 1,
  );
  const logit = model.score({
    questionIds,
    paragraphIds: req.paragraph_tokens,
    targetIds,
  });
  return { id, logit };
}

function spanLine(line: string, models: LoadedModels): Record<string, unknown> {
  let req: any;
  try {
    req = JSON.parse(line);
  } catch {
    return { id: null, error: "unparseable JSON line" };
  }
  const id = typeof req?.id === "string" ? req.id : null;
  if (id === null) return { id: null, error: "missing string id" };
  if (!models.span) return { id, error: "no span model loaded" };
  const { model } = models.span;
  if (!isIntArray(req.token_ids, model.vocab.size)) {
    return { id, error: "token_ids must be vocab-range integers" };
  }
  const { start, end } = model.forward(req.token_ids);
  return { id, start_logits: Array.from(start), end_logits: Array.from(end) };
}

export function createServer(models: LoadedModels): Server {
  return createHttpServer(async (req: IncomingMessage, res: ServerResponse) => {
    try {
      if (req.method === "GET" && req.url === "/health") {
        const payload = {
          version: SERVICE_VERSION,
          models: {
            na: models.na?.hash ?? null,
            a: models.a?.hash ?? null,
            span: models.span?.hash ?? null,
          },
        };
        res.writeHead(200, { "Content-Type": "application/json" });
        res.end(JSON.stringify(payload) + "\n");
        return;
      }
      if (req.method === "POST" && (req.url === "/score" || req.url === "/span")) {
        const body = await readBody(req);
        const handler = req.url === "/score" ? scoreLine : spanLine;
        const out: string[] = [];
        for (const line of body.split("\n")) {
          if (!line.trim()) continue;
          out.push(JSON.stringify(handler(line, models)));
        }
        res.writeHead(200, { "Content-Type": "application/x-ndjson" });
        res.end(out.join("\n") + "\n");
        return;
      }
      res.writeHead(404, { "Content-Type": "application/json" });
      res.end(JSON.stringify({ error: "unknown endpoint" }) + "\n");
    } catch (err) {
      res.writeHead(500, { "Content-Type": "application/json" });
      res.end(JSON.stringify({ error: String(err) }) + "\n");
    }
  });
}
