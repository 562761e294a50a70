#!/usr/bin/env node
/**
 * CLI: train-scorer, train-span, serve.
 *
 *   hoppipe-service train-scorer --instances na.jsonl --vocab vocab.txt \
 *       --variant na --out na_model.json [--dim 24 --hidden 24 --seed 0 \
 *       --epochs 4 --lr 1e-5 --warmup 0.1 --weight-decay 0]
 *   hoppipe-service train-span --contexts ctx.jsonl --answers answers.json \
 *       --vocab vocab.txt --out span_model.json [--epochs 3 --weight-decay 0.01]
 *   hoppipe-service serve --na na_model.json --a a_model.json \
 *       --span span_model.json --port 8750
 *
 * Defaults follow the reference fine-tuning recipe (peak lr 1e-5, 10%
 * linear warmup then linear decay, 4 scorer epochs / 3 span epochs, weight
 * decay 0 / 0.01). The desk-scale embedding models train from scratch, so
 * real runs usually pass a larger --lr.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { Artifact } from "./model.js";
import { createServer, loadModels } from "./server.js";
import {
  TRAIN_SCORER_DEFAULTS,
  TRAIN_SPAN_DEFAULTS,
  trainScorerFromFiles,
  trainSpanFromFiles,
} from "./train.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function required(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (value === undefined) throw new Error(`--${name} is required`);
  return value;
}

function numeric(flags: Map<string, string>, name: string, fallback: number): number {
  const value = flags.get(name);
  if (value === undefined) return fallback;
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) throw new Error(`--${name} must be a number`);
  return parsed;
}

function readArtifact(path: string): Artifact {
  return JSON.parse(readFileSync(path, "utf-8")) as Artifact;
}

function cmdTrainScorer(flags: Map<string, string>): number {
  const variant = required(flags, "variant");
  if (variant !== "na" && variant !== "a") {
    throw new Error('--variant must be "na" or "a"');
  }
  const artifact = trainScorerFromFiles(
    required(flags, "instances"),
    required(flags, "vocab"),
    {
      variant,
      dim: numeric(flags, "dim", TRAIN_SCORER_DEFAULTS.dim),
      hidden: numeric(flags, "hidden", TRAIN_SCORER_DEFAULTS.hidden),
      seed: numeric(flags, "seed", TRAIN_SCORER_DEFAULTS.seed),
      epochs: numeric(flags, "epochs", TRAIN_SCORER_DEFAULTS.epochs),
      peakLr: numeric(flags, "lr", TRAIN_SCORER_DEFAULTS.peakLr),
      warmupFraction: numeric(flags, "warmup", TRAIN_SCORER_DEFAULTS.warmupFraction),
      weightDecay: numeric(flags, "weight-decay", TRAIN_SCORER_DEFAULTS.weightDecay),
      log: (line) => console.error(line),
    },
  );
  const out = required(flags, "out");
  writeFileSync(out, JSON.stringify(artifact) + "\n", "utf-8");
  console.log(`wrote ${variant}-variant scorer -> ${out}`);
  return 0;
}

function cmdTrainSpan(flags: Map<string, string>): number {
  const artifact = trainSpanFromFiles(
    required(flags, "contexts"),
    required(flags, "answers"),
    required(flags, "vocab"),
    {
      dim: numeric(flags, "dim", TRAIN_SPAN_DEFAULTS.dim),
      hidden: numeric(flags, "hidden", TRAIN_SPAN_DEFAULTS.hidden),
      seed: numeric(flags, "seed", TRAIN_SPAN_DEFAULTS.seed),
      epochs: numeric(flags, "epochs", TRAIN_SPAN_DEFAULTS.epochs),
      peakLr: numeric(flags, "lr", TRAIN_SPAN_DEFAULTS.peakLr),
      warmupFraction: numeric(flags, "warmup", TRAIN_SPAN_DEFAULTS.warmupFraction),
      weightDecay: numeric(flags, "weight-decay", TRAIN_SPAN_DEFAULTS.weightDecay),
      questionsPerBatch: numeric(
        flags,
        "batch-questions",
        TRAIN_SPAN_DEFAULTS.questionsPerBatch,
      ),
      log: (line) => console.error(line),
    },
  );
  const out = required(flags, "out");
  writeFileSync(out, JSON.stringify(artifact) + "\n", "utf-8");
  const warnings = artifact.warnings ?? {};
  console.log(
    `wrote span model -> ${out} (unlocatable answers: ${
      warnings.unlocatable_answers ?? 0
    })`,
  );
  return 0;
}

function cmdServe(flags: Map<string, string>): number {
  const models = loadModels({
    na: flags.has("na") ? readArtifact(flags.get("na")!) : undefined,
    a: flags.has("a") ? readArtifact(flags.get("a")!) : undefined,
    span: flags.has("span") ? readArtifact(flags.get("span")!) : undefined,
  });
  if (!models.na && !models.a && !models.span) {
    throw new Error("serve needs at least one of --na, --a, --span");
  }
  const port = numeric(flags, "port", 8750);
  const server = createServer(models);
  server.listen(port, () => {
    console.error(`listening on :${port} (POST /score, POST /span, GET /health)`);
  });
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    switch (command) {
      case "train-scorer":
        return cmdTrainScorer(flags);
      case "train-span":
        return cmdTrainSpan(flags);
      case "serve":
        return cmdServe(flags);
      default:
        console.error(
          "usage: hoppipe-service <train-scorer|train-span|serve> [--flags]",
        );
        return 2;
    }
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  const code = main(process.argv.slice(2));
  if (code !== 0) process.exitCode = code;
}
