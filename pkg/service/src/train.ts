/**
 * Training loops.
 *
 * Scorers: 4 epochs over question-level batches (3 questions per batch,
 * already packed under the 5625-token cap by the pipeline). Batch order is
 * reshuffled each epoch with the run seed; the learning rate warms up
 * linearly over the first 10% of updates and decays linearly to 0; no
 * weight decay; cross-entropy with two classes.
 *
 * Span model: 3 epochs over 16-question batches, weight decay 0.01, loss
 * is the mean of the start and end classifier cross-entropies; the final
 * checkpoint is kept.
 */

import { Adam, SCORER_DEFAULTS, SPAN_DEFAULTS } from "./adam.js";
import {
  ContextRow,
  InstanceRow,
  instanceToExample,
  locateAnswer,
  readAnswers,
  readContexts,
  readInstances,
} from "./data.js";
import {
  Artifact,
  ScorerExample,
  ScorerModel,
  SpanModel,
  serializeScorer,
  serializeSpan,
} from "./model.js";
import { Rng } from "./rng.js";
import { Vocab } from "./tokenizer.js";

export interface TrainScorerOptions {
  variant: "na" | "a";
  dim: number;
  hidden: number;
  seed: number;
  epochs: number;
  peakLr: number;
  warmupFraction: number;
  weightDecay: number;
  log?: (line: string) => void;
}

export const TRAIN_SCORER_DEFAULTS: Omit<TrainScorerOptions, "variant"> = {
  dim: 24,
  hidden: 24,
  seed: 0,
  epochs: SCORER_DEFAULTS.epochs,
  peakLr: SCORER_DEFAULTS.peakLr,
  warmupFraction: SCORER_DEFAULTS.warmupFraction,
  weightDecay: SCORER_DEFAULTS.weightDecay,
};

export function trainScorer(
  rows: InstanceRow[],
  vocab: Vocab,
  options: TrainScorerOptions,
): { artifact: Artifact; lossCurve: number[] } {
  const badVariant = rows.find((r) => r.variant !== options.variant);
  if (badVariant) {
    throw new Error(
      `instance file carries variant ${badVariant.variant}, expected ${options.variant}`,
    );
  }
  for (const row of rows) {
    for (const id of row.token_ids) {
      if (id < 0 || id >= vocab.size) {
        throw new Error(
          `token id ${id} out of range for a ${vocab.size}-entry vocab; ` +
            "instance file and vocab do not match",
        );
      }
    }
  }

  const byBatch = new Map<number, ScorerExample[]>();
  for (const row of rows) {
    const examples = byBatch.get(row.batch) ?? [];
    examples.push(instanceToExample(row, vocab));
    byBatch.set(row.batch, examples);
  }
  const batches = [...byBatch.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([, examples]) => examples);

  const model = new ScorerModel(vocab, {
    dim: options.dim,
    hidden: options.hidden,
    seed: options.seed,
  });
  const totalSteps = batches.length * options.epochs;
  const adam = new Adam(model.params(), {
    totalSteps,
    peakLr: options.peakLr,
    warmupFraction: options.warmupFraction,
    weightDecay: options.weightDecay,
  });
  const shuffler = new Rng(options.seed + 1);
  const lossCurve: number[] = [];

  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = shuffler.shuffle([...batches.keys()]);
    let epochLoss = 0;
    for (const batchIdx of order) {
      const batch = batches[batchIdx];
      adam.zeroGrads();
      let loss = 0;
      for (const example of batch) loss += model.accumulate(example);
      loss /= batch.length;
      const inv = 1.0 / batch.length;
      for (const p of model.params()) {
        for (let i = 0; i < p.grad.length; i++) p.grad[i] *= inv;
      }
      adam.update();
      lossCurve.push(loss);
      epochLoss += loss;
    }
    options.log?.(
      `epoch ${epoch}: mean loss ${(epochLoss / batches.length).toFixed(6)}`,
    );
  }
  return { artifact: serializeScorer(model, options.variant, lossCurve), lossCurve };
}

export interface TrainSpanOptions {
  dim: number;
  hidden: number;
  seed: number;
  epochs: number;
  peakLr: number;
  warmupFraction: number;
  weightDecay: number;
  questionsPerBatch: number;
  log?: (line: string) => void;
}

export const TRAIN_SPAN_DEFAULTS: TrainSpanOptions = {
  dim: 24,
  hidden: 24,
  seed: 0,
  epochs: SPAN_DEFAULTS.epochs,
  peakLr: SPAN_DEFAULTS.peakLr,
  warmupFraction: SPAN_DEFAULTS.warmupFraction,
  weightDecay: SPAN_DEFAULTS.weightDecay,
  questionsPerBatch: SPAN_DEFAULTS.questionsPerBatch,
};

export function trainSpan(
  contexts: ContextRow[],
  answers: Record<string, string>,
  vocab: Vocab,
  options: TrainSpanOptions,
): { artifact: Artifact; lossCurve: number[]; warnings: Record<string, number> } {
  const labeled: { tokenIds: number[]; startIdx: number; endIdx: number }[] = [];
  let unlocatable = 0;
  for (const row of contexts) {
    const answer = answers[row.qid];
    if (answer === undefined) {
      throw new Error(`no gold answer for qid ${row.qid}`);
    }
    if (row.token_ids.length > SPAN_DEFAULTS.maxSequenceLength) {
      throw new Error(
        `context for ${row.qid} exceeds ${SPAN_DEFAULTS.maxSequenceLength} tokens`,
      );
    }
    const label = locateAnswer(row.token_ids, answer, vocab);
    if (label.kind === "noans" && answer !== "noans") unlocatable += 1;
    labeled.push({
      tokenIds: row.token_ids,
      startIdx: label.startIdx,
      endIdx: label.endIdx,
    });
  }
  const warnings = { unlocatable_answers: unlocatable };
  if (unlocatable > 0) {
    options.log?.(`warning: ${unlocatable} answers mapped to noans`);
  }

  const batches: (typeof labeled)[] = [];
  for (let i = 0; i < labeled.length; i += options.questionsPerBatch) {
    batches.push(labeled.slice(i, i + options.questionsPerBatch));
  }

  const model = new SpanModel(vocab, {
    dim: options.dim,
    hidden: options.hidden,
    seed: options.seed,
  });
  const totalSteps = batches.length * options.epochs;
  const adam = new Adam(model.params(), {
    totalSteps,
    peakLr: options.peakLr,
    warmupFraction: options.warmupFraction,
    weightDecay: options.weightDecay,
  });
  const shuffler = new Rng(options.seed + 1);
  const lossCurve: number[] = [];

  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = shuffler.shuffle([...batches.keys()]);
    let epochLoss = 0;
    for (const batchIdx of order) {
      const batch = batches[batchIdx];
      adam.zeroGrads();
      let loss = 0;
      for (const item of batch) {
        loss += model.accumulate(item.tokenIds, item.startIdx, item.endIdx);
      }
      loss /= batch.length;
      const inv = 1.0 / batch.length;
      for (const p of model.params()) {
        for (let i = 0; i < p.grad.length; i++) p.grad[i] *= inv;
      }
      adam.update();
      lossCurve.push(loss);
      epochLoss += loss;
    }
    options.log?.(
      `epoch ${epoch}: mean loss ${(epochLoss / batches.length).toFixed(6)}`,
    );
  }
  return {
    artifact: serializeSpan(model, lossCurve, warnings),
    lossCurve,
    warnings,
  };
}

export function trainScorerFromFiles(
  instancesPath: string,
  vocabPath: string,
  options: TrainScorerOptions,
): Artifact {
  const vocab = Vocab.fromFile(vocabPath);
  return trainScorer(readInstances(instancesPath), vocab, options).artifact;
}

export function trainSpanFromFiles(
  contextsPath: string,
  answersPath: string,
  vocabPath: string,
  options: TrainSpanOptions,
): Artifact {
  const vocab = Vocab.fromFile(vocabPath);
  return trainSpan(readContexts(contextsPath), readAnswers(answersPath), vocab, options)
    .artifact;
}
