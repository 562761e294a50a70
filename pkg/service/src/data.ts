/**
 * Parsing of the pipeline's files and label construction.
 *
 * Instance files carry full encoded sequences ([CLS] q [SEP] p [SEP]
 * answer [SEP], possibly truncated); the regions are recovered from the
 * separator positions. Span labels locate the gold answer's token-id
 * sequence inside the context (first occurrence); yes/no answers label the
 * matching tail token, and unlocatable answers fall back to noans with a
 * warning tally.
 */

import { readFileSync } from "node:fs";

import { ScorerExample } from "./model.js";
import { NOANS_TOKEN, NO_TOKEN, Vocab, YES_TOKEN, tokenize } from "./tokenizer.js";

export interface InstanceRow {
  batch: number;
  qid: string;
  paragraph: number;
  sentence: number;
  label: 0 | 1;
  variant: "na" | "a";
  token_ids: number[];
  segment_ids: number[];
}

export function readJsonLines(path: string): any[] {
  const rows: any[] = [];
  for (const line of readFileSync(path, "utf-8").split("\n")) {
    if (line.trim()) rows.push(JSON.parse(line));
  }
  return rows;
}

export function readInstances(path: string): InstanceRow[] {
  const rows = readJsonLines(path) as InstanceRow[];
  for (const row of rows) {
    if (
      typeof row.qid !== "string" ||
      !Array.isArray(row.token_ids) ||
      !Array.isArray(row.segment_ids) ||
      row.token_ids.length !== row.segment_ids.length ||
      (row.label !== 0 && row.label !== 1)
    ) {
      throw new Error(`malformed instance row for qid ${row.qid}`);
    }
  }
  return rows;
}

export interface Regions {
  questionIds: number[];
  paragraphIds: number[];
  targetIds: number[];
  answerIds: number[];
}

/** Split an encoded sequence back into its slots via separator positions. */
export function extractRegions(
  tokenIds: number[],
  segmentIds: number[],
  vocab: Vocab,
): Regions {
  const seps: number[] = [];
  for (let i = 0; i < tokenIds.length; i++) {
    if (tokenIds[i] === vocab.sepId) seps.push(i);
  }
  const first = seps[0] ?? tokenIds.length;
  const second = seps[1] ?? tokenIds.length;
  const third = seps[2] ?? tokenIds.length;
  const questionIds = tokenIds.slice(1, first);
  const paragraphIds = tokenIds.slice(Math.min(first + 1, tokenIds.length), second);
  const answerIds = tokenIds.slice(Math.min(second + 1, tokenIds.length), third);
  const targetIds = tokenIds.filter((_, i) => segmentIds[i] === 1);
  return { questionIds, paragraphIds, targetIds, answerIds };
}

/**
 * Feature view of one instance. The answer slot folds into the question
 * features unless it is the single mask token, mirroring how the wire
 * protocol transports the answer appended to the question.
 */
export function instanceToExample(row: InstanceRow, vocab: Vocab): ScorerExample {
  const regions = extractRegions(row.token_ids, row.segment_ids, vocab);
  const masked =
    regions.answerIds.length === 1 && regions.answerIds[0] === vocab.maskId;
  const questionIds = masked
    ? regions.questionIds
    : regions.questionIds.concat(regions.answerIds);
  return {
    questionIds,
    paragraphIds: regions.paragraphIds,
    targetIds: regions.targetIds,
    label: row.label,
  };
}

export interface DatasetRecord {
  _id: string;
  question: string;
  answer?: string;
  context: [string, string[]][];
  supporting_facts?: [string, number][];
}

export function readDataset(path: string): DatasetRecord[] {
  return JSON.parse(readFileSync(path, "utf-8")) as DatasetRecord[];
}

/**
 * The label the pipeline's instance builder must have assigned: positive
 * iff the (paragraph, sentence) position is an annotated support fact.
 */
export function expectedLabel(
  record: DatasetRecord,
  paragraph: number,
  sentence: number,
): 0 | 1 {
  const facts = record.supporting_facts ?? [];
  const title = record.context[paragraph][0];
  return facts.some(([t, s]) => t === title && s === sentence) ? 1 : 0;
}

export interface ContextRow {
  qid: string;
  token_ids: number[];
}

export function readContexts(path: string): ContextRow[] {
  const rows = readJsonLines(path);
  for (const row of rows) {
    if (typeof row.qid !== "string" || !Array.isArray(row.token_ids)) {
      throw new Error(
        `context row for ${row.qid} lacks token_ids; assemble with --emit-tokens`,
      );
    }
  }
  return rows as ContextRow[];
}

export interface SpanLabel {
  startIdx: number;
  endIdx: number;
  kind: "span" | "yes" | "no" | "noans";
}

/** First contiguous occurrence of `needle` inside `haystack`, or -1. */
function findSubsequence(haystack: number[], needle: number[]): number {
  if (needle.length === 0) return -1;
  outer: for (let i = 0; i + needle.length <= haystack.length; i++) {
    for (let j = 0; j < needle.length; j++) {
      if (haystack[i + j] !== needle[j]) continue outer;
    }
    return i;
  }
  return -1;
}

export function locateAnswer(
  tokenIds: number[],
  answer: string,
  vocab: Vocab,
): SpanLabel {
  const n = tokenIds.length;
  const yesIdx = n - 3;
  const noIdx = n - 2;
  const noansIdx = n - 1;
  if (answer === YES_TOKEN) return { startIdx: yesIdx, endIdx: yesIdx, kind: "yes" };
  if (answer === NO_TOKEN) return { startIdx: noIdx, endIdx: noIdx, kind: "no" };
  const answerIds = tokenize(answer, vocab);
  // Search only the body (skip [CLS] and stop before the 4-token tail).
  const body = tokenIds.slice(0, n - 4);
  const at = findSubsequence(body, answerIds);
  if (at < 0) {
    return { startIdx: noansIdx, endIdx: noansIdx, kind: "noans" };
  }
  return { startIdx: at, endIdx: at + answerIds.length - 1, kind: "span" };
}

export function readAnswers(path: string): Record<string, string> {
  const data = JSON.parse(readFileSync(path, "utf-8"));
  if (data && typeof data === "object" && "answer" in data) {
    return data.answer as Record<string, string>;
  }
  return data as Record<string, string>;
}
