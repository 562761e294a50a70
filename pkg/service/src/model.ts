/**
 * Desk-scale trainable scorers.
 *
 * ScorerModel: embedding-bag features (mean embeddings of the question
 * slot, the paragraph, and the segment-1 target sentence, plus the
 * elementwise question-target product so lexical overlap is linearly
 * visible) through one hidden layer into a 2-class head; the served logit
 * is the positive minus the negative class logit, so it is unbounded and
 * can be negative.
 *
 * SpanModel: per-token features (token embedding concatenated with the
 * mean context embedding) through one hidden layer into two linear heads
 * producing start and end logits; trained with the mean of the two
 * cross-entropies over positions.
 *
 * Everything is plain typed-array math with hand-derived gradients, so
 * training is deterministic given the seed.
 */

import { createHash } from "node:crypto";

import { Rng } from "./rng.js";
import { Vocab } from "./tokenizer.js";

export interface Param {
  name: string;
  data: Float64Array;
  grad: Float64Array;
}

function makeParam(name: string, size: number): Param {
  return { name, data: new Float64Array(size), grad: new Float64Array(size) };
}

function gaussInit(param: Param, rng: Rng, scale: number): void {
  for (let i = 0; i < param.data.length; i++) param.data[i] = rng.gauss() * scale;
}

function softmax2(z0: number, z1: number): [number, number] {
  const m = Math.max(z0, z1);
  const e0 = Math.exp(z0 - m);
  const e1 = Math.exp(z1 - m);
  const s = e0 + e1;
  return [e0 / s, e1 / s];
}

function softmaxInPlace(values: Float64Array): void {
  let max = -Infinity;
  for (const v of values) if (v > max) max = v;
  let sum = 0;
  for (let i = 0; i < values.length; i++) {
    values[i] = Math.exp(values[i] - max);
    sum += values[i];
  }
  for (let i = 0; i < values.length; i++) values[i] /= sum;
}

export interface ScorerConfig {
  dim: number;
  hidden: number;
  seed: number;
}

export interface ScorerExample {
  questionIds: number[]; // answer tokens folded in for the r_a variant
  paragraphIds: number[];
  targetIds: number[]; // segment-1 tokens
  label: 0 | 1;
}

export class ScorerModel {
  readonly vocab: Vocab;
  readonly config: ScorerConfig;
  readonly embed: Param;
  readonly w1: Param;
  readonly b1: Param;
  readonly w2: Param;
  readonly b2: Param;

  constructor(vocab: Vocab, config: ScorerConfig) {
    this.vocab = vocab;
    this.config = config;
    const { dim, hidden } = config;
    this.embed = makeParam("embed", vocab.size * dim);
    this.w1 = makeParam("w1", hidden * 4 * dim);
    this.b1 = makeParam("b1", hidden);
    this.w2 = makeParam("w2", 2 * hidden);
    this.b2 = makeParam("b2", 2);
    const rng = new Rng(config.seed);
    gaussInit(this.embed, rng, 0.1);
    gaussInit(this.w1, rng, Math.sqrt(2.0 / (4 * dim)));
    gaussInit(this.w2, rng, Math.sqrt(2.0 / hidden));
  }

  params(): Param[] {
    return [this.embed, this.w1, this.b1, this.w2, this.b2];
  }

  private meanEmbedding(ids: number[], out: Float64Array, offset: number): void {
    const { dim } = this.config;
    if (ids.length === 0) return; // empty slot stays a zero vector
    for (const id of ids) {
      const base = id * dim;
      for (let k = 0; k < dim; k++) out[offset + k] += this.embed.data[base + k];
    }
    for (let k = 0; k < dim; k++) out[offset + k] /= ids.length;
  }

  private features(ex: ScorerExample): Float64Array {
    const { dim } = this.config;
    const x = new Float64Array(4 * dim);
    this.meanEmbedding(ex.questionIds, x, 0);
    this.meanEmbedding(ex.paragraphIds, x, dim);
    this.meanEmbedding(ex.targetIds, x, 2 * dim);
    for (let k = 0; k < dim; k++) x[3 * dim + k] = x[k] * x[2 * dim + k];
    return x;
  }

  private logits(x: Float64Array): { hpre: Float64Array; h: Float64Array; z: [number, number] } {
    const { dim, hidden } = this.config;
    const width = 4 * dim;
    const hpre = new Float64Array(hidden);
    for (let j = 0; j < hidden; j++) {
      let acc = this.b1.data[j];
      const row = j * width;
      for (let k = 0; k < width; k++) acc += this.w1.data[row + k] * x[k];
      hpre[j] = acc;
    }
    const h = new Float64Array(hidden);
    for (let j = 0; j < hidden; j++) h[j] = hpre[j] > 0 ? hpre[j] : 0;
    const z: [number, number] = [this.b2.data[0], this.b2.data[1]];
    for (let c = 0; c < 2; c++) {
      const row = c * hidden;
      let acc = z[c];
      for (let j = 0; j < hidden; j++) acc += this.w2.data[row + j] * h[j];
      z[c] = acc;
    }
    return { hpre, h, z };
  }

  /** Served relevance logit: positive-class minus negative-class logit. */
  score(ex: Omit<ScorerExample, "label">): number {
    const { z } = this.logits(this.features({ ...ex, label: 0 }));
    return z[1] - z[0];
  }

  /** Accumulate gradients for one example; returns its cross-entropy. */
  accumulate(ex: ScorerExample): number {
    const { dim, hidden } = this.config;
    const width = 4 * dim;
    const x = this.features(ex);
    const { hpre, h, z } = this.logits(x);
    const p = softmax2(z[0], z[1]);
    const loss = -Math.log(Math.max(p[ex.label], 1e-12));

    const dz = [p[0], p[1]];
    dz[ex.label] -= 1;

    const dh = new Float64Array(hidden);
    for (let c = 0; c < 2; c++) {
      const row = c * hidden;
      this.b2.grad[c] += dz[c];
      for (let j = 0; j < hidden; j++) {
        this.w2.grad[row + j] += dz[c] * h[j];
        dh[j] += dz[c] * this.w2.data[row + j];
      }
    }
    const dx = new Float64Array(width);
    for (let j = 0; j < hidden; j++) {
      if (hpre[j] <= 0) continue;
      const dpre = dh[j];
      this.b1.grad[j] += dpre;
      const row = j * width;
      for (let k = 0; k < width; k++) {
        this.w1.grad[row + k] += dpre * x[k];
        dx[k] += dpre * this.w1.data[row + k];
      }
    }
    // Route the interaction block's gradient back into its two factors.
    for (let k = 0; k < dim; k++) {
      dx[k] += dx[3 * dim + k] * x[2 * dim + k];
      dx[2 * dim + k] += dx[3 * dim + k] * x[k];
    }
    this.scatterEmbedGrad(ex.questionIds, dx, 0);
    this.scatterEmbedGrad(ex.paragraphIds, dx, dim);
    this.scatterEmbedGrad(ex.targetIds, dx, 2 * dim);
    return loss;
  }

  private scatterEmbedGrad(ids: number[], dx: Float64Array, offset: number): void {
    const { dim } = this.config;
    if (ids.length === 0) return;
    const scale = 1.0 / ids.length;
    for (const id of ids) {
      const base = id * dim;
      for (let k = 0; k < dim; k++) {
        this.embed.grad[base + k] += dx[offset + k] * scale;
      }
    }
  }
}

export interface SpanConfig {
  dim: number;
  hidden: number;
  seed: number;
}

export class SpanModel {
  readonly vocab: Vocab;
  readonly config: SpanConfig;
  readonly embed: Param;
  readonly w1: Param;
  readonly b1: Param;
  readonly ws: Param;
  readonly bs: Param;
  readonly we: Param;
  readonly be: Param;

  constructor(vocab: Vocab, config: SpanConfig) {
    this.vocab = vocab;
    this.config = config;
    const { dim, hidden } = config;
    this.embed = makeParam("embed", vocab.size * dim);
    this.w1 = makeParam("w1", hidden * 2 * dim);
    this.b1 = makeParam("b1", hidden);
    this.ws = makeParam("ws", hidden);
    this.bs = makeParam("bs", 1);
    this.we = makeParam("we", hidden);
    this.be = makeParam("be", 1);
    const rng = new Rng(config.seed);
    gaussInit(this.embed, rng, 0.1);
    gaussInit(this.w1, rng, Math.sqrt(2.0 / (2 * dim)));
    gaussInit(this.ws, rng, Math.sqrt(1.0 / hidden));
    gaussInit(this.we, rng, Math.sqrt(1.0 / hidden));
  }

  params(): Param[] {
    return [this.embed, this.w1, this.b1, this.ws, this.bs, this.we, this.be];
  }

  private contextMean(tokenIds: number[]): Float64Array {
    const { dim } = this.config;
    const c = new Float64Array(dim);
    for (const id of tokenIds) {
      const base = id * dim;
      for (let k = 0; k < dim; k++) c[k] += this.embed.data[base + k];
    }
    for (let k = 0; k < dim; k++) c[k] /= tokenIds.length;
    return c;
  }

  private tokenHidden(
    tokenId: number,
    ctx: Float64Array,
  ): { hpre: Float64Array; h: Float64Array } {
    const { dim, hidden } = this.config;
    const width = 2 * dim;
    const hpre = new Float64Array(hidden);
    const base = tokenId * dim;
    for (let j = 0; j < hidden; j++) {
      let acc = this.b1.data[j];
      const row = j * width;
      for (let k = 0; k < dim; k++) acc += this.w1.data[row + k] * this.embed.data[base + k];
      for (let k = 0; k < dim; k++) acc += this.w1.data[row + dim + k] * ctx[k];
      hpre[j] = acc;
    }
    const h = new Float64Array(hidden);
    for (let j = 0; j < hidden; j++) h[j] = hpre[j] > 0 ? hpre[j] : 0;
    return { hpre, h };
  }

  forward(tokenIds: number[]): { start: Float64Array; end: Float64Array } {
    const { hidden } = this.config;
    const n = tokenIds.length;
    const ctx = this.contextMean(tokenIds);
    const start = new Float64Array(n);
    const end = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      const { h } = this.tokenHidden(tokenIds[i], ctx);
      let s = this.bs.data[0];
      let e = this.be.data[0];
      for (let j = 0; j < hidden; j++) {
        s += this.ws.data[j] * h[j];
        e += this.we.data[j] * h[j];
      }
      start[i] = s;
      end[i] = e;
    }
    return { start, end };
  }

  /** Mean of the start and end cross-entropies; accumulates gradients. */
  accumulate(tokenIds: number[], startIdx: number, endIdx: number): number {
    const { dim, hidden } = this.config;
    const width = 2 * dim;
    const n = tokenIds.length;
    const ctx = this.contextMean(tokenIds);

    const hpres: Float64Array[] = [];
    const hs: Float64Array[] = [];
    const start = new Float64Array(n);
    const end = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      const { hpre, h } = this.tokenHidden(tokenIds[i], ctx);
      hpres.push(hpre);
      hs.push(h);
      let s = this.bs.data[0];
      let e = this.be.data[0];
      for (let j = 0; j < hidden; j++) {
        s += this.ws.data[j] * h[j];
        e += this.we.data[j] * h[j];
      }
      start[i] = s;
      end[i] = e;
    }
    const ps = Float64Array.from(start);
    const pe = Float64Array.from(end);
    softmaxInPlace(ps);
    softmaxInPlace(pe);
    const loss =
      (-Math.log(Math.max(ps[startIdx], 1e-12)) -
        Math.log(Math.max(pe[endIdx], 1e-12))) /
      2;

    const dctx = new Float64Array(dim);
    for (let i = 0; i < n; i++) {
      const dsi = (ps[i] - (i === startIdx ? 1 : 0)) / 2;
      const dei = (pe[i] - (i === endIdx ? 1 : 0)) / 2;
      if (dsi === 0 && dei === 0) continue;
      const h = hs[i];
      const hpre = hpres[i];
      this.bs.grad[0] += dsi;
      this.be.grad[0] += dei;
      const dh = new Float64Array(hidden);
      for (let j = 0; j < hidden; j++) {
        this.ws.grad[j] += dsi * h[j];
        this.we.grad[j] += dei * h[j];
        dh[j] = dsi * this.ws.data[j] + dei * this.we.data[j];
      }
      const base = tokenIds[i] * dim;
      for (let j = 0; j < hidden; j++) {
        if (hpre[j] <= 0) continue;
        const dpre = dh[j];
        this.b1.grad[j] += dpre;
        const row = j * width;
        for (let k = 0; k < dim; k++) {
          this.w1.grad[row + k] += dpre * this.embed.data[base + k];
          this.embed.grad[base + k] += dpre * this.w1.data[row + k];
          this.w1.grad[row + dim + k] += dpre * ctx[k];
          dctx[k] += dpre * this.w1.data[row + dim + k];
        }
      }
    }
    const scale = 1.0 / n;
    for (const id of tokenIds) {
      const base = id * dim;
      for (let k = 0; k < dim; k++) this.embed.grad[base + k] += dctx[k] * scale;
    }
    return loss;
  }
}

export interface Artifact {
  kind: "scorer" | "span";
  variant?: "na" | "a";
  config: { dim: number; hidden: number; seed: number };
  vocab: string[];
  weights: Record<string, number[]>;
  lossCurve: number[];
  warnings?: Record<string, number>;
}

export function serializeScorer(
  model: ScorerModel,
  variant: "na" | "a",
  lossCurve: number[],
): Artifact {
  const weights: Record<string, number[]> = {};
  for (const p of model.params()) weights[p.name] = Array.from(p.data);
  return {
    kind: "scorer",
    variant,
    config: model.config,
    vocab: model.vocab.tokens,
    weights,
    lossCurve,
  };
}

export function serializeSpan(
  model: SpanModel,
  lossCurve: number[],
  warnings: Record<string, number>,
): Artifact {
  const weights: Record<string, number[]> = {};
  for (const p of model.params()) weights[p.name] = Array.from(p.data);
  return {
    kind: "span",
    config: model.config,
    vocab: model.vocab.tokens,
    weights,
    lossCurve,
    warnings,
  };
}

function loadWeights(params: Param[], weights: Record<string, number[]>): void {
  for (const p of params) {
    const stored = weights[p.name];
    if (!stored || stored.length !== p.data.length) {
      throw new Error(`artifact weight ${p.name} has the wrong shape`);
    }
    p.data.set(stored);
  }
}

export function deserializeScorer(artifact: Artifact): ScorerModel {
  if (artifact.kind !== "scorer") throw new Error("not a scorer artifact");
  const model = new ScorerModel(new Vocab(artifact.vocab), artifact.config);
  loadWeights(model.params(), artifact.weights);
  return model;
}

export function deserializeSpan(artifact: Artifact): SpanModel {
  if (artifact.kind !== "span") throw new Error("not a span artifact");
  const model = new SpanModel(new Vocab(artifact.vocab), artifact.config);
  loadWeights(model.params(), artifact.weights);
  return model;
}

export function artifactHash(artifact: Artifact): string {
  const canonical = JSON.stringify(artifact.weights);
  return createHash("sha256").update(canonical).digest("hex");
}
