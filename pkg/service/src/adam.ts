/**
 * Adam with the fine-tuning schedule: linear warmup from 0 to the peak
 * learning rate over the first 10% of steps, then linear decay back to 0.
 * Weight decay is decoupled (applied directly to the weights, scaled by
 * the current learning rate), 0 for the sentence scorers and 0.01 for the
 * span model by default.
 */

import { Param } from "./model.js";

export interface OptimizerConfig {
  peakLr: number;
  totalSteps: number;
  warmupFraction: number;
  weightDecay: number;
  beta1: number;
  beta2: number;
  eps: number;
}

export const SCORER_DEFAULTS = {
  peakLr: 1e-5,
  warmupFraction: 0.1,
  weightDecay: 0.0,
  epochs: 4,
  questionsPerBatch: 3,
  batchTokenCap: 5625,
};

export const SPAN_DEFAULTS = {
  peakLr: 1e-5,
  warmupFraction: 0.1,
  weightDecay: 0.01,
  epochs: 3,
  questionsPerBatch: 16,
  maxSequenceLength: 512,
};

export function learningRateAt(
  step: number,
  totalSteps: number,
  peak: number,
  warmupFraction: number,
): number {
  const warmup = Math.max(1, Math.floor(totalSteps * warmupFraction));
  if (step < warmup) return (peak * (step + 1)) / warmup;
  if (totalSteps <= warmup) return peak;
  return (peak * (totalSteps - step)) / (totalSteps - warmup);
}

export class Adam {
  private readonly params: Param[];
  private readonly m: Float64Array[];
  private readonly v: Float64Array[];
  private readonly config: OptimizerConfig;
  private step = 0;

  constructor(params: Param[], config: Partial<OptimizerConfig> & { totalSteps: number }) {
    this.params = params;
    this.config = {
      peakLr: config.peakLr ?? 1e-5,
      totalSteps: config.totalSteps,
      warmupFraction: config.warmupFraction ?? 0.1,
      weightDecay: config.weightDecay ?? 0.0,
      beta1: config.beta1 ?? 0.9,
      beta2: config.beta2 ?? 0.999,
      eps: config.eps ?? 1e-8,
    };
    this.m = params.map((p) => new Float64Array(p.data.length));
    this.v = params.map((p) => new Float64Array(p.data.length));
  }

  zeroGrads(): void {
    for (const p of this.params) p.grad.fill(0);
  }

  /** One update from the accumulated gradients; returns the lr used. */
  update(): number {
    const { peakLr, totalSteps, warmupFraction, weightDecay, beta1, beta2, eps } =
      this.config;
    const lr = learningRateAt(this.step, totalSteps, peakLr, warmupFraction);
    this.step += 1;
    const t = this.step;
    const bc1 = 1 - Math.pow(beta1, t);
    const bc2 = 1 - Math.pow(beta2, t);
    for (let pi = 0; pi < this.params.length; pi++) {
      const p = this.params[pi];
      const m = this.m[pi];
      const v = this.v[pi];
      for (let i = 0; i < p.data.length; i++) {
        const g = p.grad[i];
        m[i] = beta1 * m[i] + (1 - beta1) * g;
        v[i] = beta2 * v[i] + (1 - beta2) * g * g;
        const mhat = m[i] / bc1;
        const vhat = v[i] / bc2;
        p.data[i] -= lr * (mhat / (Math.sqrt(vhat) + eps) + weightDecay * p.data[i]);
      }
    }
    return lr;
  }
}
